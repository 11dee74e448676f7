#include "pcalab/robust.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "pcalab/deflation.hpp"
#include "pcalab/linalg.hpp"
#include "pcalab/rand.hpp"

namespace pcalab {

Vector clip(const Vector& x, double R) {
    if (!(R > 0.0)) throw InvalidInput("clip: R must be positive");
    const double norm = x.norm();
    const double cap = std::sqrt(R);
    if (norm <= cap) return x;
    return (cap / norm) * x;
}

Matrix clip_rows(const Matrix& points, double R) {
    if (!(R > 0.0)) throw InvalidInput("clip_rows: R must be positive");
    Matrix out = points;
    const double cap = std::sqrt(R);
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double norm = out.row(i).norm();
        if (norm > cap) out.row(i) *= cap / norm;
    }
    return out;
}

ClipConfig clip_config_from_target(double p, double cp, double rho, double trace_sigma) {
    if (!(p > 2.0)) throw InvalidInput("clip_config_from_target: p must exceed 2");
    if (!(cp > 0.0)) throw InvalidInput("clip_config_from_target: Cp must be positive");
    if (!(rho > 0.0 && rho < 0.5)) throw InvalidInput("clip_config_from_target: rho in (0, 1/2)");
    if (!(trace_sigma > 0.0)) throw InvalidInput("clip_config_from_target: trace must be positive");
    ClipConfig cfg;
    cfg.p = p;
    cfg.cp = cp;
    cfg.rho = rho;
    cfg.R = std::pow(std::pow(cp, p) / rho, 2.0 / (p - 2.0)) * trace_sigma;
    return cfg;
}

double clipping_bias_bound(double p, double cp, double u_sigma_u, double trace_sigma, double R) {
    if (!(p > 2.0) || !(cp > 0.0) || !(R > 0.0))
        throw InvalidInput("clipping_bias_bound: need p > 2, Cp > 0, R > 0");
    return std::pow(cp, p) * u_sigma_u * std::pow(trace_sigma / R, p / 2.0 - 1.0);
}

double clipping_tail_bound(double p, double cp, double trace_sigma, double R) {
    if (!(p > 2.0) || !(cp > 0.0) || !(R > 0.0))
        throw InvalidInput("clipping_tail_bound: need p > 2, Cp > 0, R > 0");
    return std::pow(cp * std::sqrt(trace_sigma / R), p - 2.0);
}

double corollary_tail_bound(double p, double cp, double rho) {
    if (!(p > 2.0) || !(cp > 0.0) || !(rho > 0.0))
        throw InvalidInput("corollary_tail_bound: need p > 2, Cp > 0, rho > 0");
    return std::pow(rho / (cp * cp), p / (p - 2.0));
}

int ContaminatedSample::outliers() const {
    int count = 0;
    for (bool flag : inlier_mask)
        if (!flag) ++count;
    return count;
}

ContaminatedSample corrupt(const Matrix& clean, double eps, CorruptStrategy strategy, Rng& rng,
                           double scale, const std::optional<Vector>& direction) {
    const int n = static_cast<int>(clean.rows());
    const int d = static_cast<int>(clean.cols());
    if (n < 1 || d < 1) throw InvalidInput("corrupt: empty sample");
    if (eps < 0.0 || eps >= 0.5) throw InvalidInput("corrupt: eps must be in [0, 1/2)");
    if (!(scale > 0.0)) throw InvalidInput("corrupt: scale must be positive");

    ContaminatedSample out;
    out.points = clean;
    out.inlier_mask.assign(n, true);
    out.eps = eps;
    const int m = static_cast<int>(std::ceil(eps * n));
    if (m == 0) return out;

    // random subset of rows to replace (partial Fisher-Yates)
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < m; ++i)
        std::swap(idx[i], idx[rng.integer(i, n - 1)]);

    Vector v = direction ? *direction : random_unit(rng, d);
    if (static_cast<int>(v.size()) != d) throw InvalidInput("corrupt: direction dimension");
    v /= v.norm();
    double max_norm = 0.0;
    for (int i = 0; i < n; ++i) max_norm = std::max(max_norm, clean.row(i).norm());
    if (max_norm <= 0.0) max_norm = 1.0;

    for (int i = 0; i < m; ++i) {
        const int r = idx[i];
        out.inlier_mask[r] = false;
        switch (strategy) {
            case CorruptStrategy::kLargeSpike:
                out.points.row(r) = (scale * max_norm) * v.transpose();
                break;
            case CorruptStrategy::kCluster: {
                Vector jitter = 0.05 * max_norm * gaussian_vector(rng, d);
                out.points.row(r) = (scale * max_norm) * v.transpose() + jitter.transpose();
                break;
            }
            case CorruptStrategy::kMirror:
                out.points.row(r) = -scale * clean.row(r);
                break;
        }
    }
    return out;
}

double stability_violation(const Matrix& points, const Vector& w, const SymMatrix& sigma_ref) {
    const int n = static_cast<int>(points.rows());
    if (static_cast<int>(w.size()) != n) throw InvalidInput("stability_violation: weight length");
    if (points.cols() != sigma_ref.dim())
        throw InvalidInput("stability_violation: dimension mismatch");
    if (w.minCoeff() < -1e-12 || w.maxCoeff() > 1.0 + 1e-12)
        throw InvalidInput("stability_violation: weights must lie in [0, 1]");
    const double sw = w.sum();
    if (sw <= 1e-12 * n) return std::numeric_limits<double>::infinity();

    Matrix weighted = points.array().colwise() * w.array();
    Matrix sigma_w = weighted.transpose() * points / sw;
    sigma_w = (sigma_w + sigma_w.transpose()) / 2.0;

    Spectrum ref = eig_sym(sigma_ref);
    const double lmax = std::max(ref.lambda(0), 0.0);
    if (lmax <= 1e-14) return std::numeric_limits<double>::infinity();
    int r = 0;
    while (r < sigma_ref.dim() && ref.lambda(r) > 1e-12 * lmax) ++r;
    Matrix q = ref.eigenvectors.mat().leftCols(r);
    Matrix a = q.transpose() * sigma_w * q;
    Matrix b(r, r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j)
            b(i, j) = a(i, j) / std::sqrt(ref.lambda(i) * ref.lambda(j));
    Spectrum dev = eig_sym(SymMatrix(b - Matrix::Identity(r, r)));
    return std::max(std::abs(dev.lambda(0)), std::abs(dev.lambda(r - 1)));
}

namespace {

Vector removal_weights(int n, const std::vector<int>& order, int m) {
    Vector w = Vector::Ones(n);
    for (int i = 0; i < m && i < n; ++i) w(order[i]) = 0.0;
    return w;
}

}  // namespace

StabilityCertificate stability_audit(const Matrix& points, double eps, double gamma,
                                     const SymMatrix& sigma_ref, int trials, std::uint64_t seed,
                                     int jobs) {
    const int n = static_cast<int>(points.rows());
    if (n < 1) throw InvalidInput("stability_audit: empty sample");
    if (trials < 1) throw InvalidInput("stability_audit: trials must be >= 1");
    if (eps < 0.0 || eps >= 0.5) throw InvalidInput("stability_audit: eps must be in [0, 1/2)");
    if (!(gamma > 0.0)) throw InvalidInput("stability_audit: gamma must be positive");

    const int m = static_cast<int>(std::floor(eps * n));

    // extremal candidates: drop the heaviest / lightest scores along the top
    // and bottom eigendirections of the reference
    std::vector<Vector> extremal;
    {
        Spectrum ref = eig_sym(sigma_ref);
        const int d = sigma_ref.dim();
        std::vector<int> dirs;
        for (int i = 0; i < std::min(3, d); ++i) dirs.push_back(i);
        for (int i = std::max(0, d - 3); i < d; ++i)
            if (std::find(dirs.begin(), dirs.end(), i) == dirs.end()) dirs.push_back(i);
        for (int di : dirs) {
            Vector v = ref.eigenvectors.mat().col(di);
            Vector score = (points * v).array().square();
            std::vector<int> order(n);
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(),
                      [&](int a, int b) { return score(a) > score(b); });
            extremal.push_back(removal_weights(n, order, m));
            std::reverse(order.begin(), order.end());
            extremal.push_back(removal_weights(n, order, m));
        }
    }

    const std::size_t total = static_cast<std::size_t>(trials) + extremal.size();
    std::vector<double> violations(total, 0.0);
    parallel_for(total, static_cast<unsigned>(jobs), [&](std::size_t t) {
        if (t < extremal.size()) {
            violations[t] = stability_violation(points, extremal[t], sigma_ref);
            return;
        }
        Rng rng(mix_seed(seed, t));
        Vector w;
        if (rng.coin()) {
            // hard random subset removal of exactly m points
            std::vector<int> order(n);
            std::iota(order.begin(), order.end(), 0);
            for (int i = 0; i < m; ++i)
                std::swap(order[i], order[rng.integer(i, n - 1)]);
            w = removal_weights(n, order, m);
        } else {
            // soft weighting, then nudged so the mean stays >= 1 - eps
            // (otherwise the sample would fall outside the audited family)
            w = Vector::Ones(n);
            for (int i = 0; i < n; ++i) w(i) = 1.0 - 2.0 * eps * rng.uniform();
            const double deficit = (1.0 - eps) - w.mean();
            if (deficit > 0.0)
                for (int i = 0; i < n; ++i) w(i) = std::min(1.0, w(i) + deficit);
        }
        violations[t] = stability_violation(points, w, sigma_ref);
    });

    StabilityCertificate cert;
    cert.eps = eps;
    cert.gamma = gamma;
    cert.sigma_ref = sigma_ref;
    cert.trials = static_cast<int>(total);
    cert.audit = *std::max_element(violations.begin(), violations.end());
    cert.pass = cert.audit <= gamma;
    return cert;
}

FilterResult filter_1epca(const Matrix& points, double eps, double gamma) {
    const int n = static_cast<int>(points.rows());
    const int d = static_cast<int>(points.cols());
    if (n < 1 || d < 1) throw InvalidInput("filter_1epca: empty sample");
    if (eps < 0.0 || eps >= 0.5) throw InvalidInput("filter_1epca: eps must be in [0, 1/2)");
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidInput("filter_1epca: gamma must be in (0, 1)");

    const int max_rounds = static_cast<int>(std::ceil(4.0 / gamma));
    Vector w = Vector::Ones(n);
    Vector v = Vector::Unit(d, 0);
    int rounds = 0;

    for (int round = 0;; ++round) {
        const double sw = w.sum();
        if (sw < n / 2.0) throw FilterCollapse("filter_1epca: over half the sample mass removed");

        // v always reflects the current weighting, including after the last
        // downweight pass
        Matrix weighted = points.array().colwise() * w.array();
        Matrix sigma_w = weighted.transpose() * points / sw;
        Spectrum s = eig_sym(SymMatrix((sigma_w + sigma_w.transpose()) / 2.0));
        v = s.eigenvectors.mat().col(0);

        if (round >= max_rounds) break;
        if (n - sw >= 2.0 * eps * n) break;  // removal budget spent

        Vector score = (points * v).array().square();
        // weighted (1 - 2 eps) quantile of the scores
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return score(a) < score(b); });
        double acc = 0.0;
        double threshold = score(order[n - 1]);
        for (int i = 0; i < n; ++i) {
            acc += w(order[i]);
            if (acc >= (1.0 - 2.0 * eps) * sw) {
                threshold = score(order[i]);
                break;
            }
        }
        double smax = 0.0;
        for (int i = 0; i < n; ++i)
            if (w(i) > 1e-12) smax = std::max(smax, score(i));
        if (smax <= (1.0 + gamma) * threshold) break;  // nothing sticks out

        for (int i = 0; i < n; ++i)
            if (score(i) > threshold) w(i) *= 1.0 - score(i) / smax;
        rounds = round + 1;
    }

    FilterResult result;
    result.v = v;
    result.weights = w;
    result.rounds = rounds;
    result.removed_mass = n - w.sum();
    return result;
}

namespace {

class RobustFilterOracle final : public OneOracle {
   public:
    RobustFilterOracle(const Matrix& points, double eps, double gamma)
        : points_(points), eps_(eps), gamma_(gamma) {}

    OracleAnswer extract(const Projector& p) override {
        Matrix projected = points_ * p.mat();  // rows (P x_i)^T, P symmetric
        FilterResult fr = filter_1epca(projected, eps_, gamma_);
        OracleAnswer ans;
        Vector u = p.apply(fr.v);  // clean up numerical drift out of span(P)
        const double norm = u.norm();
        if (norm <= 1e-12)
            throw OracleContractViolation("robust filter produced a direction outside span(P)");
        ans.u = u / norm;
        ans.iterations = fr.rounds;
        return ans;
    }
    void reset() override {}
    std::string name() const override { return "robust-filter"; }

   private:
    const Matrix& points_;
    double eps_;
    double gamma_;
};

}  // namespace

Frame robust_kpca(const Matrix& points, double eps, double gamma, int k) {
    const int d = static_cast<int>(points.cols());
    RobustFilterOracle oracle(points, eps, gamma);
    DeflationTrace trace = black_box_pca(d, k, oracle);
    return trace.frame();
}

Matrix sampler_subgaussian(const SymMatrix& sigma, int n, std::uint64_t seed) {
    if (n < 1) throw InvalidInput("sampler_subgaussian: n must be positive");
    Spectrum s = eig_sym(sigma);
    if (s.lambda(sigma.dim() - 1) < -1e-10 * std::max(1.0, s.lambda(0)))
        throw InvalidInput("sampler_subgaussian: sigma is not PSD");
    Vector sqrt_evals = s.eigenvalues.cwiseMax(0.0).cwiseSqrt();
    Matrix root = s.eigenvectors.mat() * sqrt_evals.asDiagonal() * s.eigenvectors.mat().transpose();
    Rng rng(seed);
    Matrix out(n, sigma.dim());
    for (int i = 0; i < n; ++i) out.row(i) = (root * gaussian_vector(rng, sigma.dim())).transpose();
    return out;
}

CoordinateLaw hypercontractive_coordinate_law(double p, double cp) {
    if (!(p > 2.0)) throw InvalidInput("hypercontractive_coordinate_law: p must exceed 2");
    if (!(cp > 1.0)) throw InvalidInput("hypercontractive_coordinate_law: Cp must exceed 1");
    const double target = std::pow(cp, p);
    // law: +-a w.p. q, +-b w.p. 1-q with a^2 = 1/(2q), b^2 = 1/(2(1-q)).
    // Then E[Z^2] = 1 exactly and the p-th moment is decreasing in q:
    //   f(q) = 2^(-p/2) (q^(1 - p/2) + (1 - q)^(1 - p/2)),  f(1/2) = 1.
    auto f = [&](double q) {
        return std::pow(2.0, -p / 2.0) *
               (std::pow(q, 1.0 - p / 2.0) + std::pow(1.0 - q, 1.0 - p / 2.0));
    };
    double lo = 1e-300, hi = 0.5;
    for (int it = 0; it < 500; ++it) {
        double mid = (lo + hi) / 2.0;
        if (f(mid) > target)
            lo = mid;
        else
            hi = mid;
    }
    CoordinateLaw law;
    law.q = (lo + hi) / 2.0;
    law.a = 1.0 / std::sqrt(2.0 * law.q);
    law.b = 1.0 / std::sqrt(2.0 * (1.0 - law.q));
    law.pth_moment = f(law.q);
    return law;
}

Matrix sampler_hypercontractive(double p, double cp, const SymMatrix& sigma, int n,
                                std::uint64_t seed) {
    if (n < 1) throw InvalidInput("sampler_hypercontractive: n must be positive");
    if (p == 4.0 && std::pow(cp, 4.0) < 3.0)
        throw InvalidInput(
            "sampler_hypercontractive: p = 4 product projections need Cp^4 >= 3");
    CoordinateLaw law = hypercontractive_coordinate_law(p, cp);
    Spectrum s = eig_sym(sigma);
    if (s.lambda(sigma.dim() - 1) < -1e-10 * std::max(1.0, s.lambda(0)))
        throw InvalidInput("sampler_hypercontractive: sigma is not PSD");
    Vector sqrt_evals = s.eigenvalues.cwiseMax(0.0).cwiseSqrt();
    Matrix root = s.eigenvectors.mat() * sqrt_evals.asDiagonal() * s.eigenvectors.mat().transpose();
    Rng rng(seed);
    const int d = sigma.dim();
    Matrix out(n, d);
    Vector z(d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            const double mag = (rng.uniform() < law.q) ? law.a : law.b;
            z(j) = rng.coin() ? mag : -mag;
        }
        out.row(i) = (root * z).transpose();
    }
    return out;
}

void save_dataset(const std::string& csv_path, const ContaminatedSample& sample,
                  std::uint64_t seed, const std::string& strategy) {
    std::ofstream csv(csv_path);
    if (!csv) throw InvalidInput("save_dataset: cannot open " + csv_path);
    const int d = sample.dim();
    for (int j = 0; j < d; ++j) csv << (j ? "," : "") << "x" << j;
    csv << "\n";
    char buf[64];
    for (int i = 0; i < sample.n(); ++i) {
        for (int j = 0; j < d; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", sample.points(i, j));
            csv << (j ? "," : "") << buf;
        }
        csv << "\n";
    }
    if (!csv.good()) throw Error("save_dataset: write failed for " + csv_path);

    nlohmann::ordered_json meta;
    meta["eps"] = sample.eps;
    meta["seed"] = seed;
    meta["strategy"] = strategy;
    meta["inlier_mask"] = sample.inlier_mask;
    std::ofstream side(csv_path + ".json");
    if (!side) throw InvalidInput("save_dataset: cannot open " + csv_path + ".json");
    side << meta.dump(2) << "\n";
}

ContaminatedSample load_dataset(const std::string& csv_path) {
    std::ifstream csv(csv_path);
    if (!csv) throw InvalidInput("load_dataset: cannot open " + csv_path);
    std::string line;
    if (!std::getline(csv, line)) throw InvalidInput("load_dataset: empty file " + csv_path);
    int d = 1;
    for (char c : line)
        if (c == ',') ++d;

    std::vector<double> values;
    int n = 0;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        int got = 0;
        while (std::getline(row, cell, ',')) {
            values.push_back(std::stod(cell));
            ++got;
        }
        if (got != d) throw InvalidInput("load_dataset: ragged row in " + csv_path);
        ++n;
    }
    if (n == 0) throw InvalidInput("load_dataset: no data rows in " + csv_path);

    ContaminatedSample sample;
    sample.points = Matrix(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) sample.points(i, j) = values[static_cast<std::size_t>(i) * d + j];
    sample.inlier_mask.assign(n, true);
    sample.eps = 0.0;

    std::ifstream side(csv_path + ".json");
    if (side) {
        nlohmann::json meta = nlohmann::json::parse(side);
        sample.eps = meta.value("eps", 0.0);
        if (meta.contains("inlier_mask")) {
            std::vector<bool> mask = meta.at("inlier_mask").get<std::vector<bool>>();
            if (static_cast<int>(mask.size()) != n)
                throw InvalidInput("load_dataset: sidecar mask length mismatch");
            sample.inlier_mask = mask;
        }
    }
    return sample;
}

}  // namespace pcalab
