#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "pcalab/deflation.hpp"

namespace pcalab {

// ---------------------------------------------------------------------------
// Single-pass sample sources. Every sample is consumed exactly once.
// ---------------------------------------------------------------------------
class SampleStream {
public:
    virtual ~SampleStream() = default;
    virtual Vector next() = 0;
    virtual std::int64_t remaining() const = 0;
};

class MatrixStream final : public SampleStream {
public:
    explicit MatrixStream(Matrix rows) : rows_(std::move(rows)) {}
    Vector next() override {
        if (idx_ >= rows_.rows()) throw InvalidInput("MatrixStream: exhausted");
        return rows_.row(idx_++).transpose();
    }
    std::int64_t remaining() const override { return rows_.rows() - idx_; }

private:
    Matrix rows_;
    Eigen::Index idx_ = 0;
};

class FunctionStream final : public SampleStream {
public:
    FunctionStream(std::function<Vector()> fn, std::int64_t count)
        : fn_(std::move(fn)), left_(count) {}
    Vector next() override {
        if (left_ <= 0) throw InvalidInput("FunctionStream: exhausted");
        --left_;
        return fn_();
    }
    std::int64_t remaining() const override { return left_; }

private:
    std::function<Vector()> fn_;
    std::int64_t left_;
};

// Constant-memory stream of sigma^(1/2) z with z the product law from
// sampler_hypercontractive.
std::unique_ptr<SampleStream> make_hypercontractive_stream(double p, double cp,
                                                           const SymMatrix& sigma,
                                                           std::int64_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Streaming extraction configuration. kappa_k and the targets come from the
// caller (the data model); Tr(Sigma) is estimated on a stream prefix. The
// schedule and budget constants are calibrated defaults, not derived: the
// asymptotic sample complexity has unspecified constants and is far beyond
// desk scale, so runs carry budget warnings instead of hard failures.
// ---------------------------------------------------------------------------
struct StreamConfig {
    std::int64_t n = 0;  // total samples available in the stream
    int d = 0;
    int k = 0;
    double Delta = 0.0;
    double Gamma = 0.0;
    double p = 4.0;
    double cp = 2.0;
    double beta = 0.1;     // failure probability budget (for diagnostics)
    double kappa_k = 1.0;  // caller's top-k condition number (model knowledge)
    double c_r = 4.0;      // clip radius multiplier on alpha * Tr-hat
    double eta_c = 2.0;    // Oja step scale (implementation-defined schedule)
    std::uint64_t seed = 0;

    // (Cp^2 kappa_k sqrt(k) / (Gamma sqrt(Delta)))^(1/(p-2))
    double alpha() const;

    void validate() const;  // RegimeRejected when Delta * kappa_k^2 > Gamma^2

    // per-oracle-call sample count the asymptotic theory would demand, with
    // unit constants; used only to set budget warnings
    double theoretical_call_samples() const;

    std::vector<std::string> warnings() const;
};

struct OnlineResult {
    Frame u = Frame::empty(1);
    DeflationTrace trace;           // steps record per-call sample counts
    double trace_estimate = 0.0;    // Tr-hat from the stream prefix
    double clip_radius = 0.0;       // R actually used (0 = no clipping)
    std::int64_t prefix_samples = 0;
    std::int64_t segment_samples = 0;
    std::vector<std::string> warnings;
};

// Clipped streaming deflation: estimates Tr(Sigma) on the first
// min(n/10, 10 d) samples, freezes R = c_r * alpha * Tr-hat, then splits the
// remaining samples into k equal segments, one Oja pass per extracted
// direction. O(d k) state overall. Set clip = false to run raw (for paired
// degradation studies).
OnlineResult online_kcpca(SampleStream& stream, const StreamConfig& cfg, bool clip = true);

// ---------------------------------------------------------------------------
// Transfer of a leakage guarantee across an operator-norm perturbation:
// a (delta, gamma) result on Sigma-hat with ||Sigma - Sigma-hat||_op <= rho
// becomes (8 k (rho / (gamma lambda_k))^2 + 2 delta, 2 gamma) on Sigma.
// ---------------------------------------------------------------------------
struct TransferredGuarantee {
    double Delta = 0.0;
    double Gamma = 0.0;
};

TransferredGuarantee perturbation_transfer(double delta, double gamma, double rho,
                                           double lambda_k, int k);

// The rho making the transfer come out to exactly (3 delta, 2 gamma).
double transfer_corollary_rho(double delta, double gamma, double lambda_k, int k);

// After a perturbation within gamma lambda_k(Sigma) / 2, the top-k condition
// number can at most double; checks that on a concrete pair.
bool kappa_transfer_check(const SymMatrix& sigma, const SymMatrix& sigma_hat, int k, double gamma);

}  // namespace pcalab
