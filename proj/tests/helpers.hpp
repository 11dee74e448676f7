#pragma once

// Shared test utilities. The reference computations here deliberately go
// through Eigen's own solvers (SelfAdjointEigenSolver, JacobiSVD, BDCSVD)
// so the library implementation is checked against an independent route.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "pcalab/rand.hpp"
#include "pcalab/types.hpp"

namespace testref {

// Eigenvalues of a symmetric matrix, sorted nonincreasing, via Eigen.
inline pcalab::Vector eigenvalues_desc(const pcalab::Matrix& m) {
    Eigen::SelfAdjointEigenSolver<pcalab::Matrix> es(m);
    pcalab::Vector v = es.eigenvalues();  // ascending
    return v.reverse();
}

inline double lambda_max(const pcalab::Matrix& m) {
    Eigen::SelfAdjointEigenSolver<pcalab::Matrix> es(m);
    return es.eigenvalues().maxCoeff();
}

inline double lambda_min(const pcalab::Matrix& m) {
    Eigen::SelfAdjointEigenSolver<pcalab::Matrix> es(m);
    return es.eigenvalues().minCoeff();
}

// Largest singular value via Eigen's SVD.
inline double sigma_max(const pcalab::Matrix& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    Eigen::JacobiSVD<pcalab::Matrix> svd(m);
    return svd.singularValues().maxCoeff();
}

// Sum of top-k eigenvalues via Eigen (reference for the Ky Fan computation).
inline double ky_fan_ref(const pcalab::Matrix& m, int k) {
    pcalab::Vector v = eigenvalues_desc(m);
    return v.head(k).sum();
}

}  // namespace testref
