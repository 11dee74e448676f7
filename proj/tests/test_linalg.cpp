#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "helpers.hpp"
#include "pcalab/linalg.hpp"

using namespace pcalab;

TEST_CASE("eig_sym sorts a permuted diagonal") {
    Vector d(3);
    d << 3.0, 1.0, 2.0;
    Spectrum s = eig_sym(SymMatrix::diag(d));
    CHECK(s.lambda(0) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(s.lambda(1) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(s.lambda(2) == doctest::Approx(1.0).epsilon(1e-14));
    // eigenvectors are the matching coordinate axes
    CHECK(std::abs(s.eigenvectors.mat()(0, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(s.eigenvectors.mat()(2, 1)) == doctest::Approx(1.0));
    CHECK(std::abs(s.eigenvectors.mat()(1, 2)) == doctest::Approx(1.0));
}

TEST_CASE("eig_sym on the identity keeps coordinate order for ties") {
    Spectrum s = eig_sym(SymMatrix::identity(4));
    for (int i = 0; i < 4; ++i) CHECK(s.lambda(i) == 1.0);
    CHECK((s.eigenvectors.mat() - Matrix::Identity(4, 4)).norm() == 0.0);
}

TEST_CASE("eig_sym on the zero matrix") {
    Spectrum s = eig_sym(SymMatrix(Matrix::Zero(3, 3)));
    CHECK(s.eigenvalues.norm() == 0.0);
    CHECK((s.eigenvectors.mat() - Matrix::Identity(3, 3)).norm() == 0.0);
}

TEST_CASE("eig_sym reconstructs random PSD matrices and matches the reference solver") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        int d = 2 + static_cast<int>(rng.integer(0, 10));
        SymMatrix m = random_psd(rng, d, 0.0, 3.0);
        Spectrum s = eig_sym(m);
        const Matrix& v = s.eigenvectors.mat();
        double recon = (v * s.eigenvalues.asDiagonal() * v.transpose() - m.mat()).norm();
        CHECK(recon <= 1e-10 * std::max(1.0, m.frob_norm()));
        double orth = (v.transpose() * v - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
        CHECK(orth <= 1e-12);
        Vector ref = testref::eigenvalues_desc(m.mat());
        CHECK((s.eigenvalues - ref).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, ref(0)));
        // nonincreasing order
        for (int i = 0; i + 1 < d; ++i) CHECK(s.lambda(i) >= s.lambda(i + 1));
        // sign convention: largest-magnitude entry of each eigenvector is positive
        for (int j = 0; j < d; ++j) {
            int arg = 0;
            v.col(j).cwiseAbs().maxCoeff(&arg);
            CHECK(v(arg, j) > 0.0);
        }
    }
}

TEST_CASE("eig_sym handles indefinite symmetric input") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        int d = 5;
        Vector spec(d);
        for (int i = 0; i < d; ++i) spec(i) = rng.uniform(-2.0, 2.0);
        SymMatrix m = psd_with_spectrum(rng, spec);  // name aside, spectrum may be signed
        Spectrum s = eig_sym(m);
        Vector ref = testref::eigenvalues_desc(m.mat());
        CHECK((s.eigenvalues - ref).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("eig_sym is bytewise deterministic") {
    Rng rng(23);
    SymMatrix m = random_psd(rng, 9, 0.5, 2.0);
    Spectrum a = eig_sym(m);
    Spectrum b = eig_sym(m);
    CHECK(std::memcmp(a.eigenvalues.data(), b.eigenvalues.data(),
                      sizeof(double) * a.eigenvalues.size()) == 0);
    CHECK(std::memcmp(a.eigenvectors.mat().data(), b.eigenvectors.mat().data(),
                      sizeof(double) * a.eigenvectors.mat().size()) == 0);
}

TEST_CASE("ky_fan basics") {
    Vector d(3);
    d << 3.0, 2.0, 1.0;
    SymMatrix m = SymMatrix::diag(d);
    CHECK(ky_fan(m, 2) == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(ky_fan(m, 3) == doctest::Approx(6.0).epsilon(1e-14));
    CHECK_THROWS_AS(ky_fan(m, 0), InvalidInput);
    CHECK_THROWS_AS(ky_fan(m, 4), InvalidInput);

    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        SymMatrix r = random_psd(rng, 8, 0.0, 2.0);
        for (int k = 1; k <= 8; ++k)
            CHECK(ky_fan(r, k) == doctest::Approx(testref::ky_fan_ref(r.mat(), k)).epsilon(1e-10));
        // monotone in k for PSD input
        for (int k = 1; k < 8; ++k) CHECK(ky_fan(r, k + 1) >= ky_fan(r, k) - 1e-12);
    }
}

TEST_CASE("cond_k ratios and the singular guard") {
    Vector d(3);
    d << 4.0, 2.0, 1.0;
    CHECK(cond_k(SymMatrix::diag(d), 2) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(cond_k(SymMatrix::diag(d), 1) == doctest::Approx(1.0).epsilon(1e-14));
    Vector z(3);
    z << 1.0, 1e-16, 0.0;
    CHECK_THROWS_AS(cond_k(SymMatrix::diag(z), 2), SingularTopSpace);
    CHECK_THROWS_AS(cond_k(SymMatrix::diag(z), 3), SingularTopSpace);
}

TEST_CASE("eigenspace_split keeps the threshold on the large side") {
    Vector d(3);
    d << 3.0, 2.0, 1.0;
    SymMatrix m = SymMatrix::diag(d);
    auto [ge, lt] = eigenspace_split(m, 2.0);
    CHECK(ge.cols() == 2);  // exact >=: eigenvalue 2 belongs to the large side
    CHECK(lt.cols() == 1);
    auto [ge2, lt2] = eigenspace_split(m, 2.0 + 1e-12);
    CHECK(ge2.cols() == 1);
    CHECK(lt2.cols() == 2);
    auto [ge3, lt3] = eigenspace_split(m, 100.0);
    CHECK(ge3.cols() == 0);
    CHECK(lt3.cols() == 3);
    // the two frames are mutually orthogonal and jointly complete
    Rng rng(5);
    SymMatrix r = random_psd(rng, 7, 0.0, 2.0);
    auto [a, b] = eigenspace_split(r, 1.0);
    CHECK(a.cols() + b.cols() == 7);
    if (a.cols() > 0 && b.cols() > 0)
        CHECK((a.mat().transpose() * b.mat()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("deflate_projector walks rank down and rejects out-of-span vectors") {
    Projector p = Projector::identity(3);
    Vector e1 = Vector::Unit(3, 0);
    Projector q = deflate_projector(p, e1);
    CHECK(q.rank() == 2);
    Matrix expect = Matrix::Identity(3, 3);
    expect(0, 0) = 0.0;
    CHECK((q.mat() - expect).cwiseAbs().maxCoeff() <= 1e-14);

    // e1 is no longer in span(q)
    CHECK_THROWS_AS(deflate_projector(q, e1), InvalidInput);
    // non-unit vectors are rejected
    CHECK_THROWS_AS(deflate_projector(p, 2.0 * e1), InvalidInput);

    // chain down to rank 0, then refuse further deflation
    Projector r = deflate_projector(q, Vector::Unit(3, 1));
    Projector z = deflate_projector(r, Vector::Unit(3, 2));
    CHECK(z.rank() == 0);
    CHECK(z.mat().cwiseAbs().maxCoeff() <= 1e-12);
    CHECK_THROWS_AS(deflate_projector(z, Vector::Unit(3, 2)), InvalidInput);
}

TEST_CASE("deflation keeps projectors numerically idempotent over long chains") {
    Rng rng(17);
    int d = 24;
    Projector p = Projector::identity(d);
    for (int i = 0; i < d; ++i) {
        // deflate along a random direction inside span(P)
        Vector g = gaussian_vector(rng, d);
        Vector u = p.apply(g);
        double n = u.norm();
        if (n < 1e-8) continue;
        p = deflate_projector(p, Vector(u / n));  // constructor re-validates P^2 = P
    }
    CHECK(p.rank() == 0);
}

TEST_CASE("subspace_overlap matches an SVD reference") {
    Matrix id = Matrix::Identity(4, 4);
    Frame a(id.leftCols(2));
    CHECK(subspace_overlap(a, a).frob_sq == doctest::Approx(2.0));
    CHECK(subspace_overlap(a, a).op == doctest::Approx(1.0));
    Frame b(id.rightCols(2));
    CHECK(subspace_overlap(a, b).frob_sq == doctest::Approx(0.0));
    CHECK(subspace_overlap(a, b).op == doctest::Approx(0.0));

    Rng rng(29);
    for (int trial = 0; trial < 40; ++trial) {
        int d = 6 + static_cast<int>(rng.integer(0, 6));
        int ka = 1 + static_cast<int>(rng.integer(0, 3));
        int kb = 1 + static_cast<int>(rng.integer(0, 3));
        Frame fa = random_frame(rng, d, ka);
        Frame fb = random_frame(rng, d, kb);
        OverlapReport rep = subspace_overlap(fa, fb);
        Matrix c = fa.mat().transpose() * fb.mat();
        CHECK(rep.frob_sq == doctest::Approx(c.squaredNorm()).epsilon(1e-12));
        CHECK(rep.op == doctest::Approx(testref::sigma_max(c)).epsilon(1e-10));
        CHECK(rep.op >= 0.0);
        CHECK(rep.op <= 1.0);
        CHECK(rep.frob_sq <= std::min(ka, kb) + 1e-10);
    }

    // empty frames are legal and overlap nothing
    OverlapReport rep = subspace_overlap(Frame::empty(4), a);
    CHECK(rep.frob_sq == 0.0);
    CHECK(rep.op == 0.0);
}

TEST_CASE("Cauchy interlacing holds for random compressions") {
    Rng rng(31);
    for (int trial = 0; trial < 60; ++trial) {
        int d = 4 + static_cast<int>(rng.integer(0, 8));
        int r = 1 + static_cast<int>(rng.integer(0, d - 2));
        SymMatrix m = random_psd(rng, d, -1.0, 2.0);
        Frame v = random_frame(rng, d, r);
        Vector inner = testref::eigenvalues_desc(v.mat().transpose() * m.mat() * v.mat());
        Spectrum s = eig_sym(m);
        for (int i = 0; i < r; ++i) {
            CHECK(inner(i) <= s.lambda(i) + 1e-9);
            CHECK(inner(i) >= s.lambda(d - r + i) - 1e-9);
        }
    }
}

TEST_CASE("a rank d-r projector keeps the (r+1)-th eigenvalue available") {
    Rng rng(37);
    for (int trial = 0; trial < 60; ++trial) {
        int d = 5 + static_cast<int>(rng.integer(0, 7));
        int r = 1 + static_cast<int>(rng.integer(0, d - 2));
        SymMatrix m = random_psd(rng, d, 0.0, 2.0);
        Frame cut = random_frame(rng, d, r);
        Projector p = Projector::complement_of(cut);
        Matrix pmp = p.mat() * m.mat() * p.mat();
        Spectrum s = eig_sym(m);
        CHECK(testref::lambda_max(pmp) >= s.lambda(r) - 1e-9);
    }
}

TEST_CASE("Weyl bounds for symmetric perturbations") {
    Rng rng(41);
    for (int trial = 0; trial < 40; ++trial) {
        int d = 6;
        SymMatrix a = random_psd(rng, d, -1.0, 1.5);
        SymMatrix b = random_psd(rng, d, -0.5, 0.5);
        Spectrum sa = eig_sym(a);
        Spectrum sb = eig_sym(b);
        Spectrum sum = eig_sym(SymMatrix(a.mat() + b.mat()));
        for (int i = 0; i < d; ++i) {
            CHECK(sum.lambda(i) <= sa.lambda(i) + sb.lambda(0) + 1e-10);
            CHECK(sum.lambda(i) >= sa.lambda(i) + sb.lambda(d - 1) - 1e-10);
        }
    }
}

TEST_CASE("trace inner products: Cauchy-Schwarz and PSD positivity") {
    Rng rng(43);
    for (int trial = 0; trial < 40; ++trial) {
        SymMatrix a = random_psd(rng, 5, -1.0, 2.0);
        SymMatrix b = random_psd(rng, 5, -1.0, 2.0);
        double ip = trace_inner(a, b);
        CHECK(std::abs(ip) <= a.frob_norm() * b.frob_norm() + 1e-10);
        SymMatrix pa = random_psd(rng, 5, 0.0, 2.0);
        SymMatrix pb = random_psd(rng, 5, 0.0, 2.0);
        CHECK(trace_inner(pa, pb) >= -1e-10);
    }
}

TEST_CASE("Loewner order implies trace monotonicity") {
    Rng rng(47);
    for (int trial = 0; trial < 40; ++trial) {
        SymMatrix a = random_psd(rng, 6, -1.0, 1.0);
        SymMatrix gap = random_psd(rng, 6, 0.0, 1.0);
        SymMatrix b(a.mat() + gap.mat());
        CHECK(loewner_max_violation(a, b) <= 1e-10);
        SymMatrix w = random_psd(rng, 6, 0.0, 1.0);  // PSD test direction
        CHECK(trace_inner(a, w) <= trace_inner(b, w) + 1e-9);
    }
}

TEST_CASE("generalized mean gap is nonnegative") {
    Rng rng(53);
    for (int trial = 0; trial < 40; ++trial) {
        int n = 2 + static_cast<int>(rng.integer(0, 6));
        Vector x(n), w(n);
        for (int i = 0; i < n; ++i) {
            x(i) = rng.uniform(0.0, 3.0);
            w(i) = rng.uniform(0.01, 1.0);
        }
        w /= w.sum();
        double p = rng.uniform(1.0, 4.0);
        CHECK(generalized_mean_gap(x, w, p) >= -1e-12);
    }
    Vector x(2), w(2);
    x << 1.0, 1.0;
    w << 0.5, 0.5;
    CHECK(generalized_mean_gap(x, w, 1.0) == doctest::Approx(0.0));  // p = 1 is tight
}

TEST_CASE("type validation rejects malformed inputs") {
    Matrix bad(2, 3);
    bad.setZero();
    CHECK_THROWS_AS(SymMatrix{bad}, InvalidInput);

    Matrix nan2 = Matrix::Zero(2, 2);
    nan2(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(SymMatrix{nan2}, InvalidInput);

    Matrix notorth(3, 2);
    notorth.setOnes();
    CHECK_THROWS_AS(Frame{notorth}, InvalidInput);

    Matrix half = 0.5 * Matrix::Identity(3, 3);
    CHECK_THROWS_AS(Projector(SymMatrix(half), 3), InvalidInput);
    CHECK_THROWS_AS(Projector(SymMatrix::identity(3), 2), InvalidInput);
}
