#include "pcalab/online.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pcalab/linalg.hpp"
#include "pcalab/rand.hpp"
#include "pcalab/robust.hpp"

namespace pcalab {

namespace {

class HypercontractiveStream final : public SampleStream {
public:
    HypercontractiveStream(double p, double cp, const SymMatrix& sigma, std::int64_t n,
                           std::uint64_t seed)
        : law_(hypercontractive_coordinate_law(p, cp)), left_(n), rng_(seed) {
        if (n < 1) throw InvalidInput("make_hypercontractive_stream: n must be positive");
        if (p == 4.0 && std::pow(cp, 4.0) < 3.0)
            throw InvalidInput(
                "make_hypercontractive_stream: p = 4 product projections need Cp^4 >= 3");
        Spectrum s = eig_sym(sigma);
        if (s.lambda(sigma.dim() - 1) < -1e-10 * std::max(1.0, s.lambda(0)))
            throw InvalidInput("make_hypercontractive_stream: sigma is not PSD");
        Vector sqrt_evals = s.eigenvalues.cwiseMax(0.0).cwiseSqrt();
        root_ = s.eigenvectors.mat() * sqrt_evals.asDiagonal() * s.eigenvectors.mat().transpose();
    }

    Vector next() override {
        if (left_ <= 0) throw InvalidInput("make_hypercontractive_stream: exhausted");
        --left_;
        const int d = static_cast<int>(root_.rows());
        Vector z(d);
        for (int j = 0; j < d; ++j) {
            const double mag = (rng_.uniform() < law_.q) ? law_.a : law_.b;
            z(j) = rng_.coin() ? mag : -mag;
        }
        return root_ * z;
    }

    std::int64_t remaining() const override { return left_; }

private:
    CoordinateLaw law_;
    Matrix root_;
    std::int64_t left_;
    Rng rng_;
};

// One-direction streaming power iteration over a fixed-size sample segment.
// State is a single d-vector; each sample x contributes the rank-one update
// w += eta_t <Px, w> Px followed by renormalization.
class OjaStreamOracle final : public OneOracle {
public:
    OjaStreamOracle(SampleStream& stream, std::int64_t segment, double clip_radius,
                    double lambda_scale, double eta_c, double theory_n, std::uint64_t seed)
        : stream_(stream),
          segment_(segment),
          clip_radius_(clip_radius),
          lambda_scale_(std::max(lambda_scale, 1e-300)),
          eta_c_(eta_c),
          theory_n_(theory_n),
          seed_(seed) {}

    OracleAnswer extract(const Projector& p) override {
        if (stream_.remaining() < segment_)
            throw BudgetExhausted("oja-stream: stream shorter than the configured segment",
                                  static_cast<double>(stream_.remaining()));
        const int d = p.dim();
        Rng rng(mix_seed(seed_, 7001 + static_cast<std::uint64_t>(call_)));
        ++call_;

        Vector w = p.apply(gaussian_vector(rng, d));
        while (w.norm() < 1e-12) w = p.apply(gaussian_vector(rng, d));
        w.normalize();

        const std::int64_t warmup = std::max<std::int64_t>(20, segment_ / 20);
        for (std::int64_t t = 1; t <= segment_; ++t) {
            Vector x = stream_.next();
            if (clip_radius_ > 0.0) x = clip(x, clip_radius_);
            const Vector y = p.apply(x);
            const double eta =
                eta_c_ / (lambda_scale_ * static_cast<double>(warmup + t));
            w += eta * y.dot(w) * y;
            const double nw = w.norm();
            if (nw < 1e-300) {
                w = p.apply(gaussian_vector(rng, d));
                w.normalize();
                continue;
            }
            w /= nw;
            if (t % 128 == 0) {
                w = p.apply(w);
                const double np = w.norm();
                if (np < 1e-12) {
                    w = p.apply(gaussian_vector(rng, d));
                    w.normalize();
                } else {
                    w /= np;
                }
            }
        }

        Vector u = p.apply(w);
        const double nu = u.norm();
        if (nu < 1e-12) throw Error("oja-stream: iterate escaped the working subspace");
        OracleAnswer ans;
        ans.u = u / nu;
        ans.iterations = segment_;
        ans.budget_warning = static_cast<double>(segment_) < theory_n_;
        return ans;
    }

    void reset() override { call_ = 0; }
    std::string name() const override { return "oja-stream"; }

private:
    SampleStream& stream_;
    std::int64_t segment_;
    double clip_radius_;
    double lambda_scale_;
    double eta_c_;
    double theory_n_;
    std::uint64_t seed_;
    int call_ = 0;
};

std::string format_count(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

}  // namespace

std::unique_ptr<SampleStream> make_hypercontractive_stream(double p, double cp,
                                                           const SymMatrix& sigma,
                                                           std::int64_t n, std::uint64_t seed) {
    return std::make_unique<HypercontractiveStream>(p, cp, sigma, n, seed);
}

double StreamConfig::alpha() const {
    if (!(p > 2.0)) throw InvalidInput("StreamConfig: p must exceed 2");
    if (!(cp > 0.0)) throw InvalidInput("StreamConfig: Cp must be positive");
    if (!(Gamma > 0.0) || !(Delta > 0.0)) throw InvalidInput("StreamConfig: targets must be positive");
    if (!(kappa_k >= 1.0)) throw InvalidInput("StreamConfig: kappa_k must be at least 1");
    if (k < 1) throw InvalidInput("StreamConfig: k must be positive");
    const double base = cp * cp * kappa_k * std::sqrt(static_cast<double>(k)) /
                        (Gamma * std::sqrt(Delta));
    return std::pow(base, 1.0 / (p - 2.0));
}

void StreamConfig::validate() const {
    if (n < 1) throw InvalidInput("StreamConfig: n must be positive");
    if (d < 1) throw InvalidInput("StreamConfig: d must be positive");
    if (k < 1 || k > d) throw InvalidInput("StreamConfig: k must be in [1, d]");
    if (!(Delta > 0.0) || !(Delta < 1.0)) throw InvalidInput("StreamConfig: Delta must be in (0, 1)");
    if (!(Gamma > 0.0) || !(Gamma < 1.0)) throw InvalidInput("StreamConfig: Gamma must be in (0, 1)");
    if (!(p > 2.0)) throw InvalidInput("StreamConfig: p must exceed 2");
    if (!(cp > 0.0)) throw InvalidInput("StreamConfig: Cp must be positive");
    if (!(beta > 0.0) || !(beta < 1.0)) throw InvalidInput("StreamConfig: beta must be in (0, 1)");
    if (!(kappa_k >= 1.0)) throw InvalidInput("StreamConfig: kappa_k must be at least 1");
    if (!(c_r > 0.0)) throw InvalidInput("StreamConfig: c_r must be positive");
    if (!(eta_c > 0.0)) throw InvalidInput("StreamConfig: eta_c must be positive");
    if (Delta * kappa_k * kappa_k > Gamma * Gamma)
        throw RegimeRejected("StreamConfig: Delta * kappa_k^2 exceeds Gamma^2");
}

double StreamConfig::theoretical_call_samples() const {
    const OracleBudget b = derive_oracle_budget(Delta / 3.0, Gamma / 2.0, k);
    return alpha() * static_cast<double>(d) * kappa_k * kappa_k *
           std::log(static_cast<double>(d) / beta) / (b.delta * b.gamma * b.gamma);
}

std::vector<std::string> StreamConfig::warnings() const {
    std::vector<std::string> out;
    out.emplace_back(
        "oja step schedule and budget constants are calibrated empirically, not derived");
    const double need = theoretical_call_samples();
    const double have = static_cast<double>(n) / static_cast<double>(std::max(k, 1));
    if (have < need)
        out.push_back("per-call samples " + format_count(have) +
                      " fall below the asymptotic requirement " + format_count(need));
    const OracleBudget b = derive_oracle_budget(Delta / 3.0, Gamma / 2.0, k);
    if (b.delta > b.gamma * b.gamma / 256.0)
        out.emplace_back(
            "call-level leakage target exceeds gamma^2 / 256; composition slack is thin");
    return out;
}

OnlineResult online_kcpca(SampleStream& stream, const StreamConfig& cfg, bool clip) {
    cfg.validate();
    if (stream.remaining() < cfg.n)
        throw InvalidInput("online_kcpca: stream holds fewer samples than configured");

    const std::int64_t prefix =
        std::max<std::int64_t>(1, std::min<std::int64_t>(cfg.n / 10, 10LL * cfg.d));
    double tr_hat = 0.0;
    for (std::int64_t i = 0; i < prefix; ++i) tr_hat += stream.next().squaredNorm();
    tr_hat /= static_cast<double>(prefix);

    const double radius = clip ? cfg.c_r * cfg.alpha() * tr_hat : 0.0;
    if (clip && !(radius > 0.0)) throw InvalidInput("online_kcpca: clip radius must be positive");

    const std::int64_t segment = (cfg.n - prefix) / cfg.k;
    if (segment < 1) throw InvalidInput("online_kcpca: not enough samples to form k segments");

    OjaStreamOracle oracle(stream, segment, radius, tr_hat / cfg.d, cfg.eta_c,
                           cfg.theoretical_call_samples(), cfg.seed);
    OnlineResult res;
    res.trace = black_box_pca(cfg.d, cfg.k, oracle);
    res.u = res.trace.frame();
    res.trace_estimate = tr_hat;
    res.clip_radius = radius;
    res.prefix_samples = prefix;
    res.segment_samples = segment;
    res.warnings = cfg.warnings();
    bool any_budget = false;
    for (const auto& step : res.trace.steps) any_budget = any_budget || step.budget_warning;
    if (any_budget)
        res.warnings.emplace_back(
            "one or more extraction calls ran below the theoretical sample budget");
    return res;
}

TransferredGuarantee perturbation_transfer(double delta, double gamma, double rho,
                                           double lambda_k, int k) {
    if (k < 1) throw InvalidInput("perturbation_transfer: k must be positive");
    if (!(lambda_k > 0.0)) throw InvalidInput("perturbation_transfer: lambda_k must be positive");
    if (!(delta >= 0.0) || !(gamma > 0.0) || !(rho >= 0.0))
        throw InvalidInput("perturbation_transfer: negative inputs");
    if (std::max(delta, gamma) > 0.1)
        throw PrecondUnmet("perturbation_transfer: requires max(delta, gamma) <= 1/10");
    if (!(rho < gamma * lambda_k / 2.0))
        throw PerturbationTooLarge("perturbation_transfer: rho must be below gamma * lambda_k / 2");
    const double q = rho / (gamma * lambda_k);
    TransferredGuarantee out;
    out.Delta = 8.0 * static_cast<double>(k) * q * q + 2.0 * delta;
    out.Gamma = 2.0 * gamma;
    return out;
}

double transfer_corollary_rho(double delta, double gamma, double lambda_k, int k) {
    if (k < 1) throw InvalidInput("transfer_corollary_rho: k must be positive");
    if (!(lambda_k > 0.0) || !(delta >= 0.0) || !(gamma > 0.0))
        throw InvalidInput("transfer_corollary_rho: bad inputs");
    return std::sqrt(delta / (8.0 * static_cast<double>(k))) * gamma * lambda_k;
}

bool kappa_transfer_check(const SymMatrix& sigma, const SymMatrix& sigma_hat, int k, double gamma) {
    if (sigma.dim() != sigma_hat.dim())
        throw InvalidInput("kappa_transfer_check: dimension mismatch");
    if (k < 1 || k > sigma.dim()) throw InvalidInput("kappa_transfer_check: k out of range");
    if (!(gamma > 0.0) || !(gamma < 1.0))
        throw InvalidInput("kappa_transfer_check: gamma must be in (0, 1)");
    Spectrum s = eig_sym(sigma);
    const double lambda_k = s.lambda(k - 1);
    if (!(lambda_k > 0.0)) throw SingularTopSpace("kappa_transfer_check: lambda_k must be positive");
    SymMatrix diff(sigma.mat() - sigma_hat.mat());
    Spectrum ds = eig_sym(diff);
    const double op = std::max(std::abs(ds.lambda(0)), std::abs(ds.lambda(diff.dim() - 1)));
    const double cap = gamma * lambda_k / 2.0;
    if (op > cap * (1.0 + 1e-12) + 1e-15)
        throw PerturbationTooLarge("kappa_transfer_check: perturbation exceeds gamma * lambda_k / 2");
    return cond_k(sigma_hat, k) <= 2.0 * cond_k(sigma, k) + 1e-9;
}

}  // namespace pcalab
