#include "pcalab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace pcalab {

namespace {

// Frobenius norm of the strictly off-diagonal part.
double off_diag_norm(const Matrix& a) {
    double s = 0.0;
    for (int p = 0; p < a.rows(); ++p)
        for (int q = 0; q < a.cols(); ++q)
            if (p != q) s += a(p, q) * a(p, q);
    return std::sqrt(s);
}

}  // namespace

Spectrum eig_sym(const SymMatrix& m) {
    const int d = m.dim();
    Matrix a = m.mat();
    Matrix v = Matrix::Identity(d, d);

    const double target = 1e-12 * m.frob_norm();
    const int max_sweeps = 128;

    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        if (off_diag_norm(a) <= target) break;
        // fixed row-major pair order: (0,1), (0,2), ..., (d-2,d-1)
        for (int p = 0; p < d - 1; ++p) {
            for (int q = p + 1; q < d; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                // smaller-angle root of t^2 + 2 t theta - 1 = 0, guarded for huge theta
                double t;
                if (std::abs(theta) > 1e150) {
                    t = 0.5 / theta;
                } else {
                    t = ((theta >= 0.0) ? 1.0 : -1.0) /
                        (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                a(p, p) -= t * apq;
                a(q, q) += t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (int i = 0; i < d; ++i) {
                    if (i == p || i == q) continue;
                    const double aip = a(i, p);
                    const double aiq = a(i, q);
                    a(i, p) = aip - s * (aiq + tau * aip);
                    a(p, i) = a(i, p);
                    a(i, q) = aiq + s * (aip - tau * aiq);
                    a(q, i) = a(i, q);
                }
                for (int i = 0; i < d; ++i) {
                    const double vip = v(i, p);
                    const double viq = v(i, q);
                    v(i, p) = vip - s * (viq + tau * vip);
                    v(i, q) = viq + s * (vip - tau * viq);
                }
            }
        }
    }
    if (sweep == max_sweeps && off_diag_norm(a) > target)
        throw Error("eig_sym: Jacobi sweeps did not converge");

    // sort nonincreasing; stable so degenerate eigenvalues keep diagonal order
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&a](int i, int j) { return a(i, i) > a(j, j); });

    Vector lambda(d);
    Matrix vecs(d, d);
    for (int j = 0; j < d; ++j) {
        lambda(j) = a(order[j], order[j]);
        vecs.col(j) = v.col(order[j]);
        // sign convention: first largest-magnitude entry made positive
        int arg = 0;
        double best = std::abs(vecs(0, j));
        for (int i = 1; i < d; ++i) {
            double cur = std::abs(vecs(i, j));
            if (cur > best) {
                best = cur;
                arg = i;
            }
        }
        if (vecs(arg, j) < 0.0) vecs.col(j) = -vecs.col(j);
    }

    Spectrum out{lambda, Frame(vecs)};

    // hard internal checks; a failure here is a solver bug, not bad input
    double recon = (vecs * lambda.asDiagonal() * vecs.transpose() - m.mat()).norm();
    if (recon > tol::kEigRecon * std::max(1.0, m.frob_norm()))
        throw Error("eig_sym: reconstruction residual " + std::to_string(recon));
    return out;
}

double ky_fan(const Spectrum& s, int k) {
    if (k < 1 || k > s.dim()) throw InvalidInput("ky_fan: k out of [1, d]");
    return s.eigenvalues.head(k).sum();
}

double ky_fan(const SymMatrix& m, int k) { return ky_fan(eig_sym(m), k); }

double cond_k(const Spectrum& s, int k) {
    if (k < 1 || k > s.dim()) throw InvalidInput("cond_k: k out of [1, d]");
    const double lk = s.lambda(k - 1);
    if (lk <= 1e-14)
        throw SingularTopSpace("cond_k: lambda_k = " + std::to_string(lk));
    return s.lambda(0) / lk;
}

double cond_k(const SymMatrix& m, int k) { return cond_k(eig_sym(m), k); }

std::pair<Frame, Frame> eigenspace_split(const Spectrum& s, double t) {
    const int d = s.dim();
    int ge = 0;
    while (ge < d && s.lambda(ge) >= t) ++ge;  // eigenvalues sorted, exact >=
    Matrix top = s.eigenvectors.mat().leftCols(ge);
    Matrix rest = s.eigenvectors.mat().rightCols(d - ge);
    return {Frame(top), Frame(rest)};
}

std::pair<Frame, Frame> eigenspace_split(const SymMatrix& m, double t) {
    return eigenspace_split(eig_sym(m), t);
}

Projector deflate_projector(const Projector& p, const Vector& u) {
    if (u.size() != p.dim()) throw InvalidInput("deflate_projector: dimension mismatch");
    const double n = u.norm();
    if (std::abs(n - 1.0) > tol::kUnitNorm)
        throw InvalidInput("deflate_projector: ||u|| = " + std::to_string(n) +
                           " is not unit within tolerance");
    if (p.rank() == 0) throw InvalidInput("deflate_projector: projector already has rank 0");
    if (p.span_residual(u / n) > tol::kSpanResidual)
        throw InvalidInput("deflate_projector: u is not in span(P)");
    // snap to span(P) before subtracting so idempotence survives the update
    Vector pu = p.apply(u);
    const double pn = pu.norm();
    if (pn < 0.5) throw InvalidInput("deflate_projector: projected u collapsed");
    pu /= pn;
    Matrix next = p.mat() - pu * pu.transpose();
    return Projector(SymMatrix(next), p.rank() - 1);
}

OverlapReport subspace_overlap(const Frame& a, const Frame& b) {
    if (a.dim() != b.dim()) throw InvalidInput("subspace_overlap: ambient dimension mismatch");
    if (a.cols() == 0 || b.cols() == 0) return {0.0, 0.0};
    Matrix c = a.mat().transpose() * b.mat();
    const double frob_sq = c.squaredNorm();
    // top singular value via the smaller Gram matrix
    Matrix g = (c.rows() <= c.cols()) ? Matrix(c * c.transpose()) : Matrix(c.transpose() * c);
    Spectrum gs = eig_sym(SymMatrix(g));
    double op = std::sqrt(std::max(0.0, gs.lambda(0)));
    if (op > 1.0 + 1e-8)
        throw Error("subspace_overlap: sigma_1 = " + std::to_string(op) + " exceeds 1");
    return {frob_sq, std::min(op, 1.0)};
}

double generalized_mean_gap(const Vector& x, const Vector& w, double p) {
    if (x.size() != w.size()) throw InvalidInput("generalized_mean_gap: size mismatch");
    if (p < 1.0) throw InvalidInput("generalized_mean_gap: p < 1");
    if (x.minCoeff() < 0.0 || w.minCoeff() < 0.0)
        throw InvalidInput("generalized_mean_gap: negative entries");
    if (std::abs(w.sum() - 1.0) > 1e-12)
        throw InvalidInput("generalized_mean_gap: weights must sum to 1");
    double mp = 0.0, m1 = 0.0;
    for (int i = 0; i < x.size(); ++i) {
        mp += w(i) * std::pow(x(i), p);
        m1 += w(i) * x(i);
    }
    return std::pow(mp, 1.0 / p) - m1;
}

double loewner_max_violation(const SymMatrix& a, const SymMatrix& b) {
    if (a.dim() != b.dim()) throw InvalidInput("loewner_max_violation: dimension mismatch");
    Spectrum s = eig_sym(SymMatrix(a.mat() - b.mat()));
    return s.lambda(0);
}

double trace_inner(const SymMatrix& a, const SymMatrix& b) {
    if (a.dim() != b.dim()) throw InvalidInput("trace_inner: dimension mismatch");
    return (a.mat().cwiseProduct(b.mat())).sum();
}

}  // namespace pcalab
