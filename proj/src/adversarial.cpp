#include "pcalab/adversarial.hpp"

#include <cmath>

#include "pcalab/linalg.hpp"
#include "pcalab/oracles.hpp"

namespace pcalab {

double RegimeFunction::eval(double Delta, double kappa) const {
    if (!(Delta > 0.0) || !(kappa >= 1.0))
        throw InvalidInput("RegimeFunction: need Delta > 0 and kappa >= 1");
    return nu * std::pow(Delta, alpha) * std::pow(kappa, beta);
}

RegimeValidity regime_classify(const RegimeFunction& g) {
    if (!(g.nu > 0.0)) throw InvalidInput("regime_classify: nu must be positive");
    if (!std::isfinite(g.alpha) || !std::isfinite(g.beta))
        throw InvalidInput("regime_classify: exponents must be finite");
    return (g.alpha > 0.5 || g.beta < 1.0) ? RegimeValidity::kInvalid : RegimeValidity::kValid;
}

namespace {

SymMatrix three_diag(double a, double b, double c) {
    Vector v(3);
    v << a, b, c;
    return SymMatrix::diag(v);
}

// leakage of u below (1 - gamma) * lambda_1 for an explicit diagonal spectrum
double diag_leakage(const Vector& evals, const Vector& u, double gamma) {
    double l1 = evals.maxCoeff();
    double mass = 0.0;
    for (int i = 0; i < evals.size(); ++i)
        if (evals(i) < (1.0 - gamma) * l1) mass += u(i) * u(i);
    return mass;
}

}  // namespace

RegimeInstance build_linear_regime_instance(const RegimeFunction& g, double Delta, double kappa,
                                            double C) {
    if (!(Delta > 0.0 && Delta < 1.0))
        throw InvalidInput("build_linear_regime_instance: Delta must be in (0, 1)");
    if (!(kappa >= 2.0)) throw InvalidInput("build_linear_regime_instance: kappa must be >= 2");
    if (!(C >= 1.0)) throw InvalidInput("build_linear_regime_instance: C must be >= 1");

    const double Gamma = g.eval(Delta, kappa);
    const double window = Delta * (kappa - 1.0) * std::min(1.0 / (2.0 * C), 0.25);
    if (!(Gamma > 0.0) || Gamma > window)
        throw NotInRegime("build_linear_regime_instance: claimed Gamma misses the window (0, " +
                          std::to_string(window) + "]");

    RegimeInstance inst;
    inst.Delta = Delta;
    inst.Gamma = Gamma;
    inst.kappa = kappa;
    inst.delta = Delta / C;
    inst.m = three_diag(kappa, 1.0, 1.0 - 2.0 * Gamma);

    const double delta = inst.delta;
    Vector u1(3), u2(3);
    u1 << std::sqrt(1.0 - delta), 0.0, std::sqrt(delta);
    u2 << -std::sqrt(delta), 0.0, std::sqrt(1.0 - delta);
    inst.answers = {u1, u2};

    // first call leaks exactly delta below any threshold inside (1, kappa)
    inst.call1_leakage = diag_leakage(inst.m.mat().diagonal(), u1, Gamma);
    if (std::abs(inst.call1_leakage - delta) > 1e-12)
        throw Error("build_linear_regime_instance: first call leakage off its design value");

    // second call must be the exact residual top eigenvector; the window
    // guarantees its Rayleigh quotient beats the untouched middle eigenvalue
    const double lam2 = delta * kappa + (1.0 - delta) * (1.0 - 2.0 * Gamma);
    if (lam2 + 1e-15 < 1.0)
        throw Error("build_linear_regime_instance: window failed to make call 2 exact");

    // combined frame mass below (1 - Gamma) * lambda_2(M): all of e3
    inst.predicted_mass = u1(2) * u1(2) + u2(2) * u2(2);
    return inst;
}

RegimeInstance build_sqrt_regime_instance(double Delta, double C, double c,
                                          std::optional<double> Gamma_opt) {
    if (!(Delta > 0.0 && Delta < 1.0))
        throw InvalidInput("build_sqrt_regime_instance: Delta must be in (0, 1)");
    if (!(C >= 1.0)) throw InvalidInput("build_sqrt_regime_instance: C must be >= 1");
    if (!(c > 0.0)) throw InvalidInput("build_sqrt_regime_instance: c must be positive");

    const double K = std::min({c / 10.0, 1.0 / (10.0 * C), 0.01});
    const double lo = c * Delta;
    const double hi = K * std::sqrt(Delta);
    if (lo > hi)
        throw NotInRegime("build_sqrt_regime_instance: window empty, Delta too large for c");
    const double Gamma = Gamma_opt.value_or(hi);
    if (Gamma < lo || Gamma > hi)
        throw NotInRegime("build_sqrt_regime_instance: Gamma outside [" + std::to_string(lo) +
                          ", " + std::to_string(hi) + "]");

    RegimeInstance inst;
    inst.Delta = Delta;
    inst.Gamma = Gamma;
    inst.kappa = 2.0;
    inst.delta = 10.0 * K * Delta;
    inst.m = three_diag(2.0, 1.0, 1.0 - 2.0 * Gamma);

    const double delta = inst.delta;
    Vector u1(3);
    u1 << std::sqrt(1.0 - delta), std::sqrt(delta / 2.0), std::sqrt(delta / 2.0);

    // second answer: exact top eigenvector of the deflated matrix, computed
    // numerically on the 2-dimensional residual span
    Projector p = deflate_projector(Projector::identity(3), u1);
    Matrix q = span_basis(p);
    Matrix restricted = q.transpose() * inst.m.mat() * q;
    SymMatrix rsym{(restricted + restricted.transpose()) / 2.0};
    Spectrum rs = eig_sym(rsym);
    Vector u2 = q * rs.eigenvectors.mat().col(0);
    u2 /= u2.norm();
    if (u2(2) < 0.0) u2 = -u2;  // fix the sign so component formulas apply

    inst.answers = {u1, u2};
    inst.call1_leakage = diag_leakage(inst.m.mat().diagonal(), u1, Gamma);
    if (std::abs(inst.call1_leakage - delta) > 1e-12)
        throw Error("build_sqrt_regime_instance: first call leakage off its design value");

    inst.predicted_mass = u1(2) * u1(2) + u2(2) * u2(2);
    if (!(inst.predicted_mass > Delta))
        throw Error("build_sqrt_regime_instance: construction failed to beat Delta");
    return inst;
}

double sqrt_instance_c(const RegimeFunction& g, double Delta) {
    if (!(Delta > 0.0)) throw InvalidInput("sqrt_instance_c: Delta must be positive");
    return g.nu * std::pow(2.0, g.beta) * std::pow(Delta, g.alpha - 1.0);
}

Vector TailFamily::sample(Rng& rng) const {
    Vector x(d);
    for (int i = 0; i < d; ++i) {
        double sign = rng.coin() ? 1.0 : -1.0;
        x(i) = (rng.uniform() < eps) ? sign * spike : sign;
    }
    return x;
}

TailFamily lowerbound_family(int d, double p, double cp, double eps) {
    if (d < 1) throw InvalidInput("lowerbound_family: d must be positive");
    if (!(p > 2.0)) throw InvalidInput("lowerbound_family: p must exceed 2");
    if (!(cp > 2.0)) throw PrecondUnmet("lowerbound_family: need Cp > 2");
    const double eps_max = std::pow(cp * cp / 8.0, p / 2.0);
    if (!(eps > 0.0) || eps > std::min(1.0, eps_max))
        throw PrecondUnmet("lowerbound_family: eps outside (0, min(1, (Cp^2/8)^(p/2))]");

    TailFamily fam;
    fam.d = d;
    fam.p = p;
    fam.cp = cp;
    fam.eps = eps;
    fam.spike = 0.5 * cp * std::pow(eps, -1.0 / p);
    fam.s = eps * (fam.spike * fam.spike - 1.0);
    fam.second_moment = 1.0 + fam.s;
    fam.pth_moment = (1.0 - eps) + std::pow(cp / 2.0, p);
    return fam;
}

}  // namespace pcalab
