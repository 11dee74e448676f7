#pragma once

#include "pcalab/linalg.hpp"
#include "pcalab/types.hpp"

namespace pcalab {

inline Vector gaussian_vector(Rng& rng, int d) {
    Vector v(d);
    for (int i = 0; i < d; ++i) v(i) = rng.gaussian();
    return v;
}

inline Vector random_unit(Rng& rng, int d) {
    for (;;) {
        Vector v = gaussian_vector(rng, d);
        double n = v.norm();
        if (n > 1e-8) return v / n;
    }
}

// Haar-ish random orthogonal matrix: QR of a Gaussian matrix with the sign
// ambiguity fixed by the diagonal of R (deterministic given the rng state).
inline Matrix random_orthogonal(Rng& rng, int d) {
    Matrix g(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) g(i, j) = rng.gaussian();
    return orthonormalize(g).mat();
}

inline Frame random_frame(Rng& rng, int d, int k) {
    Matrix g(d, k);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < k; ++j) g(i, j) = rng.gaussian();
    return orthonormalize(g);
}

// Q diag(spectrum) Q^T for a random rotation Q; spectrum need not be sorted.
inline SymMatrix psd_with_spectrum(Rng& rng, const Vector& spectrum) {
    int d = static_cast<int>(spectrum.size());
    Matrix q = random_orthogonal(rng, d);
    Matrix m = q * spectrum.asDiagonal() * q.transpose();
    return SymMatrix(m);
}

// Random PSD matrix with eigenvalues drawn uniformly from [lo, hi].
inline SymMatrix random_psd(Rng& rng, int d, double lo, double hi) {
    Vector spec(d);
    for (int i = 0; i < d; ++i) spec(i) = rng.uniform(lo, hi);
    std::sort(spec.data(), spec.data() + d, std::greater<double>());
    return psd_with_spectrum(rng, spec);
}

// Random frame close to the top-k eigenspace of m: take the top-k eigenbasis,
// add noise of the given scale, re-orthonormalize.
inline Frame near_top_frame(Rng& rng, const Spectrum& s, int k, double noise) {
    Matrix base = s.eigenvectors.mat().leftCols(k);
    Matrix g(base.rows(), k);
    for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < k; ++j) g(i, j) = rng.gaussian();
    return orthonormalize(base + noise * g);
}

}  // namespace pcalab
