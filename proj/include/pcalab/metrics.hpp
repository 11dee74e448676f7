#pragma once

#include "pcalab/linalg.hpp"

namespace pcalab {

// ---------------------------------------------------------------------------
// Energy-style error: how much of the best possible top-k energy a frame
// captures. epsilon = 1 - trace(U^T M U) / (sum of top-k eigenvalues).
// Raw epsilon can dip a hair below zero from rounding; report consumers may
// clamp, assertions in tests never do.
// ---------------------------------------------------------------------------
struct EpcaReport {
    int k = 0;
    double energy = 0.0;    // trace(U^T M U)
    double ky_fan_k = 0.0;  // sum of the k largest eigenvalues of M
    double epsilon = 0.0;   // 1 - energy / ky_fan_k

    double epsilon_clamped() const { return epsilon < 0.0 ? 0.0 : epsilon; }
};

EpcaReport epca_error(const SymMatrix& m, const Frame& u);

// ---------------------------------------------------------------------------
// Spectral-leakage error: squared Frobenius overlap of U with the eigenspace
// of M strictly below (1 - gamma) * lambda_k(M). The threshold comparison is
// exact (>= keeps an eigenvalue on the large side).
// ---------------------------------------------------------------------------
struct CpcaReport {
    int k = 0;
    double gamma = 0.0;
    double threshold = 0.0;  // (1 - gamma) * lambda_k(M)
    double mass = 0.0;       // || W^T U ||_F^2, W = below-threshold eigenbasis
    int small_dim = 0;       // number of eigenvalues strictly below threshold
};

CpcaReport cpca_mass(const SymMatrix& m, const Frame& u, double gamma);

// Energy guarantee -> leakage guarantee: a frame with ePCA error eps has
// below-threshold mass at most eps * ||M||_k / (gamma * lambda_k(M)).
double etoc_convert(const SymMatrix& m, int k, double eps, double gamma);

// Leakage guarantee -> energy guarantee for a single direction (k = 1 only;
// no analogous scalar bound is exposed for k > 1): eps <= gamma + delta.
double ctoe_convert(double delta, double gamma);

// ---------------------------------------------------------------------------
// Deflation perturbation identity. With M = L Lam L^T + S Sig S^T split at
// (1 - gamma) * lambda_k(M), Mt = (I - UU^T) M (I - UU^T) split at
// (1 - gamma2) * lambda_k2(Mt), the cross-coupling obeys
//
//   S^T Lt = (I - S^T U U^T S) Sig S^T Lt Lt_inv  -  S^T U U^T L Lam L^T Lt Lt_inv
//
// (Lt_inv = inverse of the selected top eigenvalue block of Mt). The function
// evaluates both sides and returns the Frobenius residual plus the natural
// scale ||M||_op / min(selected eigenvalues), against which the residual
// should vanish. k is taken as min(2 * cols(U), d) and k2 as
// min(cols(U), d - cols(U)): the two-block merge shape this identity serves.
// ---------------------------------------------------------------------------
struct WedinReport {
    double residual = 0.0;  // || LHS - RHS ||_F
    double scale = 0.0;     // max(1, ||M||_op / lambda_min(selected block))
};

WedinReport wedin_residual(const SymMatrix& m, const Frame& u, double gamma, double gamma2);

// ---------------------------------------------------------------------------
// Two-block composition: U1 (k1 cols, leakage (delta1, gamma1) on M) followed
// by U2 (k2 cols, leakage (delta2, gamma2) on the U1-deflated matrix, columns
// orthogonal to U1) gives a combined frame with leakage at most
//
//   delta = delta1 + 2 delta2
//         + (4 delta1 / gamma2^2) * ||U1^T L Lam L^T Lt||_op^2 / lambda_k(M)^2
//
// at gamma = max(gamma1, 2 gamma2), k = k1 + k2. All four scalars must lie in
// [0, 1/10]; gamma2 must be positive.
// ---------------------------------------------------------------------------
struct ComposeReport {
    double delta = 0.0;       // predicted combined leakage bound
    double gamma = 0.0;       // max(gamma1, 2 * gamma2)
    int k = 0;                // k1 + k2
    double cross_term = 0.0;  // the operator-norm coupling contribution
};

ComposeReport compose_bound(const SymMatrix& m, const Frame& u1, const Frame& u2,
                            double delta1, double delta2, double gamma1, double gamma2);

// ---------------------------------------------------------------------------
// Head guarantee: after deflating a prefix, the residual spectrum either has
// a usable relative gamma-gap at index h (1-based, maximal such index in
// [1, m-1]) or none at all (h = 0). In both cases the eigenvalue ratio
// lambda_{h+1} / lambda_m is at most (1-gamma)^-(m-h-1) <= 1 + 2 m gamma.
// delta (the tail-overlap budget) depends on the frame being certified, so
// find_head_index leaves it 0 for the caller to fill.
// ---------------------------------------------------------------------------
struct HeadGuarantee {
    int h = 0;
    double omega = 0.0;
    double delta = 0.0;
};

HeadGuarantee find_head_index(const SymMatrix& m_residual, int m, double gamma);

// || (I - UU^T) M (I - UU^T) - (I - VV^T) M (I - VV^T) ||_op: how far two
// deflation choices leave the residual matrix apart.
double deflated_opnorm_diff(const SymMatrix& m, const Frame& u, const Frame& v);

}  // namespace pcalab
