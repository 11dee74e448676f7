#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pcalab/metrics.hpp"
#include "pcalab/oracles.hpp"

namespace pcalab {

// ---------------------------------------------------------------------------
// Black-box deflation driver. Starting from P0 = I it asks the oracle for one
// direction per step, validates the answer (unit norm up to 1e-10 drift,
// span containment up to 1e-8), snaps it onto span(P), and deflates:
// P_i = P_{i-1} - u_i u_i^T. When a reference matrix is supplied, each step
// also records the residual top eigenvalue and the per-call energy error the
// accepted direction achieved on P_{i-1} M P_{i-1}.
// ---------------------------------------------------------------------------
struct DeflationStep {
    int index = 0;          // 1-based call number
    int rank_before = 0;    // rank of the projector handed to the oracle
    Vector u;               // accepted (snapped) direction
    int oracle_iterations = 0;
    double residual_lambda1 = std::numeric_limits<double>::quiet_NaN();
    double call_epsilon = std::numeric_limits<double>::quiet_NaN();
    double certified_delta = std::numeric_limits<double>::quiet_NaN();
    double certified_gamma = std::numeric_limits<double>::quiet_NaN();
    bool null_residual_space = false;
    bool budget_warning = false;
};

struct DeflationTrace {
    int d = 0;
    int k = 0;
    std::string oracle_name;
    Matrix u;  // d x k, columns in extraction order
    std::vector<DeflationStep> steps;

    Frame frame() const { return Frame(u); }

    std::string to_json() const;
    static DeflationTrace from_json(const std::string& text);
};

DeflationTrace black_box_pca(int d, int k, OneOracle& oracle,
                             const SymMatrix* certify = nullptr);

// ---------------------------------------------------------------------------
// End-to-end verdicts for the two deflation guarantees.
// ---------------------------------------------------------------------------

// Energy guarantee: if every call is an eps-good single-direction answer,
// the assembled frame is an eps-good k-frame. Certification is mandatory: a
// call whose measured error exceeds eps (beyond 1e-12) throws PrecondUnmet,
// since the guarantee was never applicable to that run.
struct EpcaVerdict {
    bool pass = false;
    double eps = 0.0;
    double epsilon_achieved = 0.0;
    EpcaReport report;
    DeflationTrace trace;
};

EpcaVerdict verify_epca_theorem(const SymMatrix& m, int k, OneOracle& oracle, double eps);

// Per-call oracle budget (delta, gamma) that makes k certified single-
// direction calls compose into a (Delta, Gamma) guarantee for the frame.
// The chain walks the target down through the merge layers:
//   Delta_bar   = Delta / (640 k^2)     Gamma_bar   = Gamma / (10 k)
//   Delta_prime = Delta_bar / (18 k^2)  Gamma_prime = Gamma_bar / (2 k)
//   delta = Delta_prime / (132 k^2)^ceil(log2 k)
//   gamma = Gamma_prime / 2^ceil(log2 k)
struct OracleBudget {
    double delta = 0.0;
    double gamma = 0.0;
    double delta_bar = 0.0;
    double delta_prime = 0.0;
    double gamma_bar = 0.0;
    double gamma_prime = 0.0;
    int levels = 0;  // ceil(log2 k)
};

OracleBudget derive_oracle_budget(double Delta, double Gamma, int k);

using OracleFactory = std::function<std::unique_ptr<OneOracle>(double delta, double gamma)>;

// Leakage guarantee: requires Delta * cond_k(M)^2 <= Gamma^2 (otherwise
// RegimeRejected), derives the per-call budget above, runs deflation with a
// factory-made certified oracle, and measures the combined leakage at Gamma.
struct CpcaVerdict {
    bool pass = false;
    double Delta = 0.0;
    double Gamma = 0.0;
    double mass = 0.0;
    OracleBudget budget;
    DeflationTrace trace;
};

CpcaVerdict verify_cpca_theorem(const SymMatrix& m, int k, double Delta, double Gamma,
                                const OracleFactory& factory);

// ---------------------------------------------------------------------------
// Merge-schedule audit. Buckets are maximal runs of the top-k spectrum with
// no relative gamma_bar-gap; inside a bucket blocks merge dyadically with the
// no-gap rule (bound 130 k_left^2 b_left + 2 b_right), across buckets with
// the gapped rule (bound 2 (b_left + b_right)); gamma doubles on the right
// child either way. Every node compares the measured leakage of its block
// against the residual matrix at the block's start with the composed bound.
// Diagnostic: nodes carry pass flags, nothing throws.
// ---------------------------------------------------------------------------

// End indices (1-based, increasing, final element k) of the gap buckets.
std::vector<int> gap_buckets(const Spectrum& s, int k, double gamma_bar);

struct AuditNode {
    int first = 0;      // steps (first, last] in 1-based extraction order
    int last = 0;
    bool gapped = false;  // merged across a spectral gap (bucket boundary)
    bool leaf = false;
    double gamma = 0.0;
    double measured = 0.0;
    double bound = 0.0;
    bool pass = false;
};

struct KappaCheck {
    int bucket = 0;  // 1-based
    int first = 0;
    int last = 0;
    double kappa = 0.0;
    bool pass = false;  // kappa <= 2 (the well-conditioned-piece property)
};

struct AuditReport {
    std::vector<AuditNode> nodes;
    std::vector<KappaCheck> kappa;
    double root_measured = 0.0;
    double root_bound = 0.0;
    double root_gamma = 0.0;
    // closed forms the recursive bounds must stay under:
    double bucket_closed_form = 0.0;  // max over buckets of (132 k_b^2)^ceil(log2 k_b) * delta_in
    double merge_closed_form = 0.0;   // 4 r^2 * bucket_closed_form for r buckets
    bool all_pass = false;

    std::string to_json() const;
};

AuditReport dyadic_merge_audit(const SymMatrix& m, const DeflationTrace& trace, double delta_in,
                               double gamma_in, const std::vector<int>& bucket_ends);

}  // namespace pcalab
