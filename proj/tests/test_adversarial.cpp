#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "pcalab/adversarial.hpp"
#include "pcalab/deflation.hpp"

using namespace pcalab;

namespace {

// leakage of u below (1 - gamma) * lambda_1(A), via an independent eigensolve
double leakage_ref(const Matrix& a, const Vector& u, double gamma) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    double l1 = es.eigenvalues().maxCoeff();
    double mass = 0.0;
    for (int i = 0; i < a.rows(); ++i)
        if (es.eigenvalues()(i) < (1.0 - gamma) * l1)
            mass += std::pow(es.eigenvectors().col(i).dot(u), 2.0);
    return mass;
}

double run_instance_mass(const RegimeInstance& inst) {
    ScriptedOracle oracle(inst.answers);
    DeflationTrace trace = black_box_pca(3, 2, oracle, &inst.m);
    return cpca_mass(inst.m, trace.frame(), inst.Gamma).mass;
}

}  // namespace

TEST_CASE("regime_classify separates sound exponent pairs from broken ones") {
    CHECK(regime_classify({1.0, 0.5, 1.0}) == RegimeValidity::kValid);
    CHECK(regime_classify({0.3, 0.25, 2.0}) == RegimeValidity::kValid);
    CHECK(regime_classify({1.0, 0.51, 1.0}) == RegimeValidity::kInvalid);
    CHECK(regime_classify({1.0, 0.5, 0.99}) == RegimeValidity::kInvalid);
    CHECK(regime_classify({5.0, 1.0, 0.5}) == RegimeValidity::kInvalid);
    CHECK_THROWS_AS(regime_classify({0.0, 0.5, 1.0}), InvalidInput);
}

TEST_CASE("linear instance: per-call compliant answers, total leakage one") {
    RegimeFunction g{0.01, 1.0, 0.5};  // kappa exponent below 1
    REQUIRE(regime_classify(g) == RegimeValidity::kInvalid);
    double Delta = 0.01, kappa = 100.0, C = 2.0;
    RegimeInstance inst = build_linear_regime_instance(g, Delta, kappa, C);

    CHECK(inst.Gamma == doctest::Approx(g.eval(Delta, kappa)).epsilon(1e-12));
    CHECK(inst.delta == doctest::Approx(Delta / C).epsilon(1e-12));
    CHECK(inst.m.mat()(0, 0) == kappa);
    CHECK(inst.m.mat()(2, 2) == doctest::Approx(1.0 - 2.0 * inst.Gamma).epsilon(1e-12));

    // the two answers form an orthonormal pair
    REQUIRE(inst.answers.size() == 2);
    CHECK(std::abs(inst.answers[0].norm() - 1.0) <= 1e-12);
    CHECK(std::abs(inst.answers[1].norm() - 1.0) <= 1e-12);
    CHECK(std::abs(inst.answers[0].dot(inst.answers[1])) <= 1e-12);

    // call 1 leaks exactly delta; call 2 is exact on the deflated matrix
    CHECK(inst.call1_leakage == doctest::Approx(inst.delta).epsilon(1e-12));
    Matrix p1 = Matrix::Identity(3, 3) - inst.answers[0] * inst.answers[0].transpose();
    Matrix residual = p1 * inst.m.mat() * p1;
    CHECK(leakage_ref(residual, inst.answers[1], inst.Gamma) <= 1e-13);

    // combined frame leaks everything below the frame threshold
    CHECK(inst.predicted_mass == doctest::Approx(1.0).epsilon(1e-12));
    double measured = run_instance_mass(inst);
    CHECK(measured == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(measured > Delta);
}

TEST_CASE("linear instance refuses claims outside its window") {
    RegimeFunction honest{1.0, 0.5, 1.0};  // Gamma = sqrt(Delta) * kappa: far too big
    CHECK_THROWS_AS(build_linear_regime_instance(honest, 0.01, 2.0, 1.0), NotInRegime);
    CHECK_THROWS_AS(build_linear_regime_instance({0.01, 1.0, 0.5}, 1.5, 100.0, 2.0), InvalidInput);
    CHECK_THROWS_AS(build_linear_regime_instance({0.01, 1.0, 0.5}, 0.01, 1.5, 2.0), InvalidInput);
}

TEST_CASE("sqrt instance: closed-form residual eigenvalue and component ratios") {
    double Delta = 1e-4;
    RegimeInstance inst = build_sqrt_regime_instance(Delta);
    double K = 0.01;  // min(c/10, 1/(10C), 1/100) with defaults C = 1, c = 0.5
    CHECK(inst.Gamma == doctest::Approx(K * std::sqrt(Delta)).epsilon(1e-12));
    double delta = inst.delta;
    double Gamma = inst.Gamma;
    CHECK(delta == doctest::Approx(10.0 * K * Delta).epsilon(1e-12));

    // top eigenvalue of the deflated matrix, in closed form
    Matrix p1 = Matrix::Identity(3, 3) - inst.answers[0] * inst.answers[0].transpose();
    Matrix residual = p1 * inst.m.mat() * p1;
    Eigen::SelfAdjointEigenSolver<Matrix> es(residual);
    double lam_numeric = es.eigenvalues().maxCoeff();
    double disc = 4.0 * Gamma * Gamma + delta * delta +
                  delta * Gamma * (2.0 * delta + delta * Gamma - 4.0 * Gamma);
    double lam_closed =
        1.0 + delta / 2.0 + delta * Gamma / 2.0 + (std::sqrt(disc) / 2.0 - Gamma);
    CHECK(std::abs(lam_closed - lam_numeric) <= 1e-10);
    CHECK(lam_closed > 1.0 + delta / 2.0);
    CHECK(lam_closed < 1.0 + 1.5 * delta);

    // second answer matches its closed-form shape
    const Vector& u2 = inst.answers[1];
    double lam = lam_closed;
    double r31 = (lam - 1.0) / (lam - 1.0 + 2.0 * Gamma);  // u23 / u22
    double r11 = std::sqrt(2.0 * (1.0 - delta) / delta) * (1.0 - lam) / (2.0 - lam);
    CHECK(u2(2) / u2(1) == doctest::Approx(r31).epsilon(1e-6));
    CHECK(u2(0) / u2(1) == doctest::Approx(r11).epsilon(1e-6));
    CHECK(u2(1) * u2(1) >= 1.0 / 3.0);

    // the dead-coordinate pickup beats both its closed-form floor and Delta
    CHECK(u2(2) * u2(2) >= delta * delta / (75.0 * Gamma * Gamma) - 1e-15);
    CHECK(u2(2) * u2(2) > Delta);

    // per-call compliance and the frame-level failure, measured end to end
    CHECK(inst.call1_leakage == doctest::Approx(delta).epsilon(1e-12));
    CHECK(leakage_ref(residual, u2, Gamma) <= 1e-13);
    double measured = run_instance_mass(inst);
    CHECK(measured == doctest::Approx(inst.predicted_mass).epsilon(1e-9));
    CHECK(measured > Delta);
}

TEST_CASE("sqrt instance window checks") {
    CHECK_THROWS_AS(build_sqrt_regime_instance(0.01), NotInRegime);  // window empty at c = 0.5
    CHECK_THROWS_AS(build_sqrt_regime_instance(1e-4, 1.0, 0.5, 2e-4), NotInRegime);  // above hi
    CHECK_THROWS_AS(build_sqrt_regime_instance(1e-4, 1.0, 0.5, 1e-5), NotInRegime);  // below lo
    CHECK_THROWS_AS(build_sqrt_regime_instance(0.0), InvalidInput);

    // wiring a concrete alpha > 1/2 claim through the window floor helper
    RegimeFunction g{2.0, 0.8, 1.0};
    REQUIRE(regime_classify(g) == RegimeValidity::kInvalid);
    double Delta = 1e-12;
    double c = sqrt_instance_c(g, Delta);
    CHECK(c == doctest::Approx(2.0 * 2.0 * std::pow(Delta, -0.2)).epsilon(1e-12));
    CHECK(c * Delta == doctest::Approx(g.eval(Delta, 2.0)).epsilon(1e-9));
    RegimeInstance inst = build_sqrt_regime_instance(Delta, 1.0, c);
    CHECK(inst.Gamma >= g.eval(Delta, 2.0));  // inside the claimed-safe region
    CHECK(inst.predicted_mass > Delta);
    CHECK(run_instance_mass(inst) > Delta);
}

TEST_CASE("lowerbound family carries its moments exactly") {
    TailFamily fam = lowerbound_family(3, 4.0, 3.0, 0.01);
    double spike = 0.5 * 3.0 * std::pow(0.01, -0.25);
    CHECK(fam.spike == doctest::Approx(spike).epsilon(1e-12));
    CHECK(fam.s == doctest::Approx(0.01 * (spike * spike - 1.0)).epsilon(1e-12));
    CHECK(fam.second_moment == doctest::Approx(1.0 + fam.s).epsilon(1e-12));
    CHECK(fam.pth_moment == doctest::Approx(0.99 + 81.0 / 16.0).epsilon(1e-12));

    // empirical moments agree within Monte Carlo noise
    Rng rng(401);
    int n = 20000;
    double m2 = 0.0, m4 = 0.0;
    long count = 0;
    for (int i = 0; i < n; ++i) {
        Vector x = fam.sample(rng);
        REQUIRE(x.size() == 3);
        for (int j = 0; j < 3; ++j) {
            m2 += x(j) * x(j);
            m4 += std::pow(x(j), 4.0);
            ++count;
        }
    }
    m2 /= double(count);
    m4 /= double(count);
    CHECK(std::abs(m2 - fam.second_moment) <= 0.03);
    CHECK(std::abs(m4 - fam.pth_moment) <= 0.9);

    // deterministic under a fixed seed
    Rng a(55), b(55);
    CHECK((fam.sample(a) - fam.sample(b)).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(lowerbound_family(3, 4.0, 2.0, 0.01), PrecondUnmet);
    CHECK_THROWS_AS(lowerbound_family(3, 4.0, 2.1, 0.5), PrecondUnmet);
    CHECK_NOTHROW(lowerbound_family(3, 4.0, 2.1, 0.2));
    CHECK_THROWS_AS(lowerbound_family(0, 4.0, 3.0, 0.01), InvalidInput);
    CHECK_THROWS_AS(lowerbound_family(3, 2.0, 3.0, 0.01), InvalidInput);
}
