#pragma once

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "pcalab/linalg.hpp"

namespace pcalab {

// ---------------------------------------------------------------------------
// One call of a single-direction PCA oracle: given the current projector P,
// produce a unit vector in span(P). Self-reported diagnostics ride along so
// drivers and audits can check advertised guarantees without re-deriving
// them. NaN means "this oracle does not certify that quantity".
// ---------------------------------------------------------------------------
struct OracleAnswer {
    Vector u;
    int iterations = 0;
    // per-call energy error 1 - u^T A u / lambda_1(A) on the residual matrix A
    double achieved_epsilon = std::numeric_limits<double>::quiet_NaN();
    // per-call certified leakage below (1 - certified_gamma) * lambda_1(A)
    double certified_delta = std::numeric_limits<double>::quiet_NaN();
    double certified_gamma = std::numeric_limits<double>::quiet_NaN();
    bool null_residual_space = false;  // residual matrix was ~0; u is arbitrary in span(P)
    bool budget_warning = false;       // ran out of samples; answer is best effort
};

class OneOracle {
public:
    virtual ~OneOracle() = default;
    // Called with the projector for the current deflation step. Successive
    // calls see the projector shrink by exactly the previous answer.
    virtual OracleAnswer extract(const Projector& p) = 0;
    // Forget cross-call state so the oracle can serve a fresh run.
    virtual void reset() = 0;
    virtual std::string name() const = 0;
};

// Orthonormal basis of span(P), columns in ambient coordinates.
Matrix span_basis(const Projector& p);

// ---------------------------------------------------------------------------
// SpanTracker: orthonormal basis Q of span(P) plus the compression
// B = Q^T M Q, maintained incrementally as deflation removes one direction
// per step (a Householder update instead of a fresh d x d eigensolve).
// ---------------------------------------------------------------------------
class SpanTracker {
public:
    SpanTracker(const SymMatrix& m, const Projector& p);

    int rank() const { return static_cast<int>(q_.cols()); }
    const Matrix& basis() const { return q_; }
    const Matrix& restricted() const { return b_; }  // rank x rank compression of M

    // Remove one direction (given in ambient coordinates, must lie in span).
    void remove(const Vector& u);

    // Lift coordinates in the tracked basis back to ambient space.
    Vector lift(const Vector& coords) const { return q_ * coords; }

private:
    Matrix q_;
    Matrix b_;
};

// Shared bookkeeping for oracles that read an explicit matrix: lazily sync a
// SpanTracker against the projector sequence the driver feeds us.
class MatrixOracleBase : public OneOracle {
public:
    explicit MatrixOracleBase(const SymMatrix& m) : m_(m) {}
    void reset() override {
        tracker_.reset();
        pending_.resize(0);
    }

protected:
    // Ensure tracker_ matches span(P); reuse the incremental update when the
    // driver followed the deflation protocol, rebuild otherwise.
    SpanTracker& sync(const Projector& p);

    SymMatrix m_;
    std::unique_ptr<SpanTracker> tracker_;
    Vector pending_;  // our previous answer, not yet folded into the tracker
};

// Exact oracle: top eigenvector of the residual matrix P M P (ties broken by
// the deterministic solver order). A numerically zero residual matrix yields
// a flagged arbitrary basis vector of span(P).
class ExactOracle final : public MatrixOracleBase {
public:
    explicit ExactOracle(const SymMatrix& m) : MatrixOracleBase(m) {}
    OracleAnswer extract(const Projector& p) override;
    std::string name() const override { return "exact"; }
};

// Certified power iteration: runs until the leakage of the iterate below
// (1 - gamma) * lambda_1(P M P) is at most delta (verified against the
// restricted eigenbasis each iteration), then reports the certificate.
// Throws BudgetExhausted (carrying the best achieved leakage) if max_iters
// rounds are not enough.
class PowerOracle final : public MatrixOracleBase {
public:
    PowerOracle(const SymMatrix& m, double delta, double gamma, std::uint64_t seed,
                long max_iters = 2'000'000)
        : MatrixOracleBase(m), delta_(delta), gamma_(gamma), seed_(seed), max_iters_(max_iters) {
        if (delta_ < 0.0 || gamma_ <= 0.0 || gamma_ >= 1.0)
            throw InvalidInput("PowerOracle: need delta >= 0 and gamma in (0, 1)");
        if (max_iters_ < 1) throw InvalidInput("PowerOracle: max_iters < 1");
    }
    OracleAnswer extract(const Projector& p) override;
    std::string name() const override { return "power"; }

private:
    double delta_;
    double gamma_;
    std::uint64_t seed_;
    long max_iters_;
    int call_ = 0;
};

// Saturating adversarial energy oracle: answers are as bad as an eps energy
// budget allows. It mixes the top restricted eigenvector v1 with the worst
// restricted direction vr so the per-call error equals eps exactly whenever
// eps <= 1 - lambda_r / lambda_1 (and the best achievable error otherwise).
class AdversarialEpsOracle final : public MatrixOracleBase {
public:
    AdversarialEpsOracle(const SymMatrix& m, double eps) : MatrixOracleBase(m), eps_(eps) {
        if (eps_ < 0.0 || eps_ >= 1.0) throw InvalidInput("AdversarialEpsOracle: eps in [0, 1)");
    }
    OracleAnswer extract(const Projector& p) override;
    std::string name() const override { return "adversarial-eps"; }

private:
    double eps_;
};

// Replays a fixed list of answers (validated against span(P) as they go).
class ScriptedOracle final : public OneOracle {
public:
    explicit ScriptedOracle(std::vector<Vector> answers) : answers_(std::move(answers)) {}
    OracleAnswer extract(const Projector& p) override;
    void reset() override { next_ = 0; }
    std::string name() const override { return "scripted"; }

private:
    std::vector<Vector> answers_;
    std::size_t next_ = 0;
};

}  // namespace pcalab
