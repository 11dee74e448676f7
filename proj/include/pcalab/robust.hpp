#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pcalab/common.hpp"
#include "pcalab/types.hpp"

namespace pcalab {

// Point sets are row-major: one sample per row, n x d.

// ---------------------------------------------------------------------------
// Radial clipping: T_R(x) = min(1, sqrt(R) / |x|) x. Direction preserved,
// output norm at most sqrt(R).
// ---------------------------------------------------------------------------
Vector clip(const Vector& x, double R);
Matrix clip_rows(const Matrix& points, double R);

struct ClipConfig {
    double R = 0.0;    // squared-radius clip threshold
    double rho = 0.0;  // target covariance bias (relative, operator norm)
    double p = 0.0;
    double cp = 0.0;
};

// Radius making the clipped second moment rho-close in operator norm:
// R = (Cp^p / rho)^(2/(p-2)) * Tr(Sigma).
ClipConfig clip_config_from_target(double p, double cp, double rho, double trace_sigma);

// Clipping bias along one direction: Cp^p (u' Sigma u) (Tr Sigma / R)^(p/2 - 1).
double clipping_bias_bound(double p, double cp, double u_sigma_u, double trace_sigma, double R);
// Chance a raw sample exceeds the clip radius: (Cp (Tr Sigma / R)^(1/2))^(p-2).
double clipping_tail_bound(double p, double cp, double trace_sigma, double R);
// Same tail at the radius from clip_config_from_target: (rho / Cp^2)^(p/(p-2)).
double corollary_tail_bound(double p, double cp, double rho);

// ---------------------------------------------------------------------------
// Strong contamination: an adversary that saw the clean sample replaces
// exactly ceil(eps * n) points.
// ---------------------------------------------------------------------------
enum class CorruptStrategy { kLargeSpike, kCluster, kMirror };

struct ContaminatedSample {
    Matrix points;                 // n x d, corrupted
    std::vector<bool> inlier_mask; // ground truth, one flag per row
    double eps = 0.0;

    int n() const { return static_cast<int>(points.rows()); }
    int dim() const { return static_cast<int>(points.cols()); }
    int outliers() const;
};

// Replaces a random subset of ceil(eps n) rows. large-spike: every outlier
// sits at (scale * max inlier norm) * direction. cluster: same point plus a
// small jitter. mirror: amplified sign-flips of the replaced rows themselves
// (x -> -scale x). direction defaults to a seeded random unit vector.
ContaminatedSample corrupt(const Matrix& clean, double eps, CorruptStrategy strategy, Rng& rng,
                           double scale = 10.0,
                           const std::optional<Vector>& direction = std::nullopt);

// ---------------------------------------------------------------------------
// (eps, gamma)-stability audit. The definition quantifies over every
// weighting w in [0,1]^n with mean weight >= 1 - eps; that family is
// infinite, so the audit samples it: random hard subsets, random soft
// weightings, and greedy removals along extremal eigendirections of the
// reference. A PASS is sampled evidence, not a proof.
// ---------------------------------------------------------------------------

// Worst relative Loewner violation of the w-weighted second moment against
// sigma_ref, measured on range(sigma_ref) after whitening:
// || diag(l)^(-1/2) Q' Sigma_w Q diag(l)^(-1/2) - I ||_op.
double stability_violation(const Matrix& points, const Vector& w, const SymMatrix& sigma_ref);

struct StabilityCertificate {
    double eps = 0.0;
    double gamma = 0.0;
    SymMatrix sigma_ref = SymMatrix::identity(1);
    double audit = 0.0;  // worst violation found
    bool pass = false;   // audit <= gamma
    int trials = 0;
};

StabilityCertificate stability_audit(const Matrix& points, double eps, double gamma,
                                     const SymMatrix& sigma_ref, int trials = 500,
                                     std::uint64_t seed = 0, int jobs = 1);

// ---------------------------------------------------------------------------
// Soft quantile filter for one robust component. Maintains weights w; each
// round scores points by their squared projection onto the current weighted
// top eigenvector and downweights scores above the (1 - 2 eps) weighted
// quantile by w_i *= 1 - score_i / score_max. Stops when nothing sticks out
// past (1 + gamma) times the quantile, when 2 eps n weight has been removed,
// or after ceil(4 / gamma) rounds.
// ---------------------------------------------------------------------------
struct FilterResult {
    Vector v;         // unit vector, top eigenvector of the final weighting
    Vector weights;   // final w in [0,1]^n
    int rounds = 0;
    double removed_mass = 0.0;  // n - sum(w)
};

FilterResult filter_1epca(const Matrix& points, double eps, double gamma);

// Robust k-component extraction: black-box deflation whose oracle runs the
// filter on the projected points {P x_i}, reusing the same sample each call.
Frame robust_kpca(const Matrix& points, double eps, double gamma, int k);

// ---------------------------------------------------------------------------
// Samplers.
// ---------------------------------------------------------------------------

// Rows are sigma^(1/2) g with g standard Gaussian.
Matrix sampler_subgaussian(const SymMatrix& sigma, int n, std::uint64_t seed);

// Heavy-tailed product law: each coordinate is a symmetric two-point mixture
//   +/- a  with probability q,   +/- b  with probability 1 - q,
// solved so that E[Z^2] = 1 exactly and E[|Z|^p] = Cp^p (so the coordinate
// p-th moment ratio is exactly Cp); rows are sigma^(1/2) z. For p = 4 the
// product law's one-dimensional projections satisfy E<v,x>^4 <=
// max(3, Cp^4) (v' Sigma v)^2, so Cp^4 >= 3 is required there; for other p
// only the coordinate moments are exact.
Matrix sampler_hypercontractive(double p, double cp, const SymMatrix& sigma, int n,
                                std::uint64_t seed);

// Exact moments of the coordinate law used by sampler_hypercontractive.
struct CoordinateLaw {
    double q = 0.0;
    double a = 0.0;  // rare magnitude
    double b = 0.0;  // common magnitude
    double pth_moment = 0.0;
};
CoordinateLaw hypercontractive_coordinate_law(double p, double cp);

// ---------------------------------------------------------------------------
// Dataset I/O: CSV with header x0..x{d-1}, one point per row, full-precision
// floats, plus a JSON sidecar (same path + ".json") carrying eps, seed,
// strategy, and the ground-truth inlier mask.
// ---------------------------------------------------------------------------
void save_dataset(const std::string& csv_path, const ContaminatedSample& sample,
                  std::uint64_t seed, const std::string& strategy);
ContaminatedSample load_dataset(const std::string& csv_path);

}  // namespace pcalab
