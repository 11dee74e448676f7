#pragma once

#include <utility>

#include "pcalab/types.hpp"

namespace pcalab {

// ---------------------------------------------------------------------------
// Deterministic symmetric eigendecomposition.
//
// Cyclic Jacobi rotations in fixed row-major sweep order; convergence is
// declared when the off-diagonal Frobenius mass drops to 1e-12 * ||M||_F.
// Identical input bytes give identical output bytes: no randomized pivoting,
// no threshold that depends on uninitialized state. Eigenvalues come back
// nonincreasing (ties keep their pre-sort order) and each eigenvector is
// sign-fixed so its largest-magnitude entry is positive.
// ---------------------------------------------------------------------------
Spectrum eig_sym(const SymMatrix& m);

// Sum of the k largest eigenvalues (the Ky Fan k-norm for PSD input).
// k must lie in [1, d].
double ky_fan(const SymMatrix& m, int k);
double ky_fan(const Spectrum& s, int k);

// Top-space condition number lambda_1 / lambda_k. Throws SingularTopSpace
// when lambda_k <= 1e-14 (ratio meaningless at or below noise level).
double cond_k(const SymMatrix& m, int k);
double cond_k(const Spectrum& s, int k);

// Split the eigenbasis at a threshold: first frame spans eigenvectors with
// eigenvalue >= t (exact comparison, no epsilon), second spans the rest.
std::pair<Frame, Frame> eigenspace_split(const SymMatrix& m, double t);
std::pair<Frame, Frame> eigenspace_split(const Spectrum& s, double t);

// P - u u^T for a unit vector u in span(P); rank drops by one. The vector is
// first replaced by its normalized image under P so the result stays an
// orthogonal projector to working precision.
Projector deflate_projector(const Projector& p, const Vector& u);

struct OverlapReport {
    double frob_sq;  // ||A^T B||_F^2, total squared overlap
    double op;       // sigma_1(A^T B), worst single-direction overlap, in [0, 1]
};

// Overlap between the subspaces spanned by two frames on the same R^d.
OverlapReport subspace_overlap(const Frame& a, const Frame& b);

// --- small comparison utilities used by property tests and audits ----------

// (sum_i w_i x_i^p)^(1/p) - sum_i w_i x_i for nonnegative x and a probability
// vector w; nonnegative for p >= 1 (power-mean inequality).
double generalized_mean_gap(const Vector& x, const Vector& w, double p);

// lambda_max(A - B); A <= B in the Loewner order iff this is <= 0 (up to fp).
double loewner_max_violation(const SymMatrix& a, const SymMatrix& b);

// <A, B> = trace(A B) for symmetric matrices.
double trace_inner(const SymMatrix& a, const SymMatrix& b);

}  // namespace pcalab
