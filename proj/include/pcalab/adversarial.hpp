#pragma once

#include <optional>
#include <vector>

#include "pcalab/common.hpp"
#include "pcalab/types.hpp"

namespace pcalab {

// ---------------------------------------------------------------------------
// Counterexample constructions against over-optimistic per-call -> frame
// leakage conversions. A conversion claim is summarized by a regime function
//   g(Delta, kappa) = nu * Delta^alpha * kappa^beta
// read as: "whenever g(Delta, kappa) <= Gamma, per-call budgets derived from
// Delta suffice for the frame to leak at most Delta below (1 - Gamma)".
// Claims with alpha > 1/2 (too little Delta) or beta < 1 (too little kappa)
// are breakable; the builders below produce concrete 3x3 instances with
// scripted per-call-compliant answers whose combined frame leaks more than
// Delta - in the linear case, everything.
// ---------------------------------------------------------------------------

struct RegimeFunction {
    double nu = 1.0;
    double alpha = 0.5;
    double beta = 1.0;

    double eval(double Delta, double kappa) const;
};

enum class RegimeValidity { kValid, kInvalid };

// invalid iff the Delta exponent is above 1/2 or the kappa exponent below 1
RegimeValidity regime_classify(const RegimeFunction& g);

struct RegimeInstance {
    SymMatrix m = SymMatrix::identity(3);  // 3x3 diagonal instance
    std::vector<Vector> answers;  // two scripted oracle answers
    double Delta = 0.0;           // claimed frame leakage budget
    double Gamma = 0.0;           // frame threshold slack
    double kappa = 0.0;           // top-2 condition number of m
    double delta = 0.0;           // per-call budget every answer respects
    double call1_leakage = 0.0;   // leakage of the first answer (== delta)
    double predicted_mass = 0.0;  // frame leakage below (1 - Gamma) lambda_2
};

// Instance for claims with beta < 1. Gamma is taken from the claim itself,
// Gamma = g(Delta, kappa); the construction needs the window
//   Gamma <= Delta * (kappa - 1) * min(1 / (2 C), 1 / 4)
// (otherwise NotInRegime). Both answers are per-call compliant at
// delta = Delta / C, yet the frame puts mass exactly 1 below the threshold.
RegimeInstance build_linear_regime_instance(const RegimeFunction& g, double Delta, double kappa,
                                            double C);

// Instance for claims with alpha > 1/2, at fixed kappa = 2. The window is
//   c * Delta <= Gamma <= K * sqrt(Delta),  K = min(c/10, 1/(10 C), 1/100);
// Gamma defaults to the top of the window. Answers are per-call compliant at
// delta = 10 K Delta <= Delta / C, and the frame leaks more than Delta.
RegimeInstance build_sqrt_regime_instance(double Delta, double C = 1.0, double c = 0.5,
                                          std::optional<double> Gamma = std::nullopt);

// Window floor for wiring a concrete claim into the sqrt instance: the
// smallest c with c * Delta >= g(Delta, 2), i.e. c = nu 2^beta Delta^(alpha-1).
double sqrt_instance_c(const RegimeFunction& g, double Delta);

// ---------------------------------------------------------------------------
// Product family showing that bounded p-th moments plus eps-contamination
// leave an unavoidable estimation floor. Each coordinate is independently
//   (1 - eps):  +/- 1       (fair signs)
//   eps:        +/- spike   with spike = Cp * eps^(-1/p) / 2
// Moments are exact by construction:
//   E[X^2] = 1 + s,  s = eps (Cp^2 eps^(-2/p) / 4 - 1)
//   E[|X|^p] = (1 - eps) + Cp^p / 2^p
// ---------------------------------------------------------------------------
struct TailFamily {
    int d = 0;
    double p = 0.0;
    double cp = 0.0;
    double eps = 0.0;
    double spike = 0.0;          // magnitude of the rare component
    double s = 0.0;              // variance excess carried by the spikes
    double second_moment = 0.0;  // per-coordinate, 1 + s
    double pth_moment = 0.0;     // per-coordinate E|X|^p

    Vector sample(Rng& rng) const;
};

// Requires Cp > 2 and eps <= (Cp^2 / 8)^(p/2) so the spike actually carries
// excess variance beyond what the p-th moment budget forces.
TailFamily lowerbound_family(int d, double p, double cp, double eps);

}  // namespace pcalab
