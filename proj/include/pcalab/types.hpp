#pragma once

#include <Eigen/Dense>

#include "pcalab/common.hpp"

namespace pcalab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Tolerances shared by the value-type validity checks. These are part of the
// library contract: constructors throw InvalidInput when they are exceeded.
namespace tol {
inline constexpr double kSymmetry = 1e-10;       // max |A - A^T| entry
inline constexpr double kOrthonormal = 1e-10;    // max |V^T V - I| entry
inline constexpr double kIdempotent = 1e-10;     // max |P^2 - P| entry
inline constexpr double kProjectorTrace = 1e-8;  // |trace(P) - rank|
inline constexpr double kUnitNorm = 1e-10;       // oracle answer norm drift
inline constexpr double kSpanResidual = 1e-8;    // ||P u - u||_2 for span checks
inline constexpr double kEigRecon = 1e-10;       // ||V L V^T - M||_F / max(1, ||M||_F)
}  // namespace tol

// ---------------------------------------------------------------------------
// SymMatrix: a real symmetric d x d matrix. Construction symmetrizes the
// input (averaging A and A^T) and rejects non-finite entries, so downstream
// code can rely on exact symmetry.
// ---------------------------------------------------------------------------
class SymMatrix {
public:
    explicit SymMatrix(const Matrix& a) {
        if (a.rows() != a.cols()) throw InvalidInput("SymMatrix: input is not square");
        if (a.rows() < 1) throw InvalidInput("SymMatrix: dimension must be >= 1");
        if (!a.allFinite()) throw InvalidInput("SymMatrix: non-finite entry");
        m_ = 0.5 * (a + a.transpose());
    }

    static SymMatrix diag(const Vector& values) {
        Matrix a = values.asDiagonal();
        return SymMatrix(a);
    }

    static SymMatrix identity(int d) { return SymMatrix(Matrix::Identity(d, d)); }

    int dim() const { return static_cast<int>(m_.rows()); }
    const Matrix& mat() const { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }

    double frob_norm() const { return m_.norm(); }

private:
    Matrix m_;
};

// ---------------------------------------------------------------------------
// Frame: a d x r matrix with orthonormal columns (r >= 0; r = 0 frames are
// legal and stand for the trivial subspace).
// ---------------------------------------------------------------------------
class Frame {
public:
    explicit Frame(const Matrix& v) : v_(v) { validate(); }

    // empty frame on R^d
    static Frame empty(int d) { return Frame(Matrix::Zero(d, 0)); }

    static Frame from_vector(const Vector& u) {
        double n = u.norm();
        if (n <= 0.0) throw InvalidInput("Frame: zero vector");
        Matrix v = u / n;
        return Frame(v);
    }

    int dim() const { return static_cast<int>(v_.rows()); }
    int cols() const { return static_cast<int>(v_.cols()); }
    const Matrix& mat() const { return v_; }
    Vector col(int i) const { return v_.col(i); }

private:
    void validate() const {
        if (v_.rows() < 1) throw InvalidInput("Frame: dimension must be >= 1");
        if (!v_.allFinite()) throw InvalidInput("Frame: non-finite entry");
        if (v_.cols() == 0) return;
        if (v_.cols() > v_.rows()) throw InvalidInput("Frame: more columns than rows");
        Matrix g = v_.transpose() * v_ - Matrix::Identity(v_.cols(), v_.cols());
        double worst = g.cwiseAbs().maxCoeff();
        if (worst > tol::kOrthonormal)
            throw InvalidInput("Frame: columns not orthonormal (max deviation " +
                               std::to_string(worst) + ")");
    }

    Matrix v_;
};

// Orthonormalize the columns of a (full column rank) matrix; deterministic
// Householder QR with the sign of each diagonal of R fixed positive.
inline Frame orthonormalize(const Matrix& a) {
    if (a.cols() == 0) return Frame::empty(static_cast<int>(a.rows()));
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
    Matrix r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
    for (int j = 0; j < a.cols(); ++j) {
        if (std::abs(r(j, j)) < 1e-12 * std::max(1.0, a.norm()))
            throw InvalidInput("orthonormalize: rank-deficient input");
        if (r(j, j) < 0) q.col(j) = -q.col(j);
    }
    return Frame(q);
}

// ---------------------------------------------------------------------------
// Projector: an orthogonal projector P = P^T = P^2 with an explicit rank.
// Deflation walks these down one rank at a time.
// ---------------------------------------------------------------------------
class Projector {
public:
    Projector(const SymMatrix& p, int rank) : p_(p), rank_(rank) { validate(); }

    static Projector identity(int d) { return Projector(SymMatrix::identity(d), d); }

    // P = F F^T projects onto the span of the frame
    static Projector from_frame(const Frame& f) {
        Matrix p = f.mat() * f.mat().transpose();
        return Projector(SymMatrix(p), f.cols());
    }

    // P = I - F F^T projects onto the orthogonal complement
    static Projector complement_of(const Frame& f) {
        Matrix p = Matrix::Identity(f.dim(), f.dim()) - f.mat() * f.mat().transpose();
        return Projector(SymMatrix(p), f.dim() - f.cols());
    }

    int dim() const { return p_.dim(); }
    int rank() const { return rank_; }
    const SymMatrix& sym() const { return p_; }
    const Matrix& mat() const { return p_.mat(); }

    Vector apply(const Vector& x) const { return p_.mat() * x; }

    // distance of u from span(P); 0 iff u is fixed by P
    double span_residual(const Vector& u) const { return (p_.mat() * u - u).norm(); }

private:
    void validate() const {
        if (rank_ < 0 || rank_ > p_.dim()) throw InvalidInput("Projector: rank out of range");
        const Matrix& p = p_.mat();
        double idem = (p * p - p).cwiseAbs().maxCoeff();
        if (idem > tol::kIdempotent)
            throw InvalidInput("Projector: not idempotent (max |P^2-P| = " +
                               std::to_string(idem) + ")");
        double tr = p.trace();
        if (std::abs(tr - rank_) > tol::kProjectorTrace)
            throw InvalidInput("Projector: trace " + std::to_string(tr) +
                               " does not match rank " + std::to_string(rank_));
    }

    SymMatrix p_;
    int rank_;
};

// ---------------------------------------------------------------------------
// Spectrum: full eigendecomposition of a SymMatrix, eigenvalues nonincreasing,
// eigenvector sign fixed so each column's largest-magnitude entry is positive.
// ---------------------------------------------------------------------------
struct Spectrum {
    Vector eigenvalues;  // sorted nonincreasing
    Frame eigenvectors;  // column i pairs with eigenvalues[i]

    int dim() const { return eigenvectors.dim(); }
    double lambda(int i) const { return eigenvalues(i); }  // 0-based
};

}  // namespace pcalab
