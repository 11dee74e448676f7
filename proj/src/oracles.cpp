#include "pcalab/oracles.hpp"

#include <cmath>

namespace pcalab {

// Basis of span(P) from scratch: eigenvectors of P with eigenvalue near 1.
// Projector eigenvalues are 0/1 up to validation tolerance, so 0.5 separates.
Matrix span_basis(const Projector& p) {
    if ((p.mat() - Matrix::Identity(p.dim(), p.dim())).cwiseAbs().maxCoeff() < 1e-12)
        return Matrix::Identity(p.dim(), p.dim());  // fast path for the first call
    Spectrum s = eig_sym(p.sym());
    return s.eigenvectors.mat().leftCols(p.rank());
}

SpanTracker::SpanTracker(const SymMatrix& m, const Projector& p) {
    if (m.dim() != p.dim()) throw InvalidInput("SpanTracker: dimension mismatch");
    q_ = span_basis(p);
    b_ = q_.transpose() * m.mat() * q_;
}

void SpanTracker::remove(const Vector& u) {
    const int r = rank();
    if (r == 0) throw InvalidInput("SpanTracker: rank already 0");
    Vector c = q_.transpose() * u;
    const double cn = c.norm();
    if (cn < 0.9) throw InvalidInput("SpanTracker: direction is not in the tracked span");
    c /= cn;
    if (r == 1) {
        q_ = Matrix(q_.rows(), 0);
        b_ = Matrix(0, 0);
        return;
    }
    // Householder H (symmetric, orthogonal) sending c to +-e1; its trailing
    // columns span the complement of c inside the tracked subspace.
    Vector v = c;
    v(0) += (c(0) >= 0.0 ? 1.0 : -1.0);
    const double vv = v.squaredNorm();
    Matrix h = Matrix::Identity(r, r) - (2.0 / vv) * (v * v.transpose());
    Matrix qh = q_ * h;
    Matrix bh = h * b_ * h;
    q_ = qh.rightCols(r - 1);
    b_ = bh.bottomRightCorner(r - 1, r - 1);
    b_ = 0.5 * (b_ + b_.transpose()).eval();  // keep the compression exactly symmetric
}

SpanTracker& MatrixOracleBase::sync(const Projector& p) {
    if (tracker_ && pending_.size() > 0 && p.rank() == tracker_->rank() - 1) {
        tracker_->remove(pending_);
        pending_.resize(0);
    } else if (!tracker_ || p.rank() != tracker_->rank()) {
        tracker_ = std::make_unique<SpanTracker>(m_, p);
        pending_.resize(0);
    }
    return *tracker_;
}

OracleAnswer ExactOracle::extract(const Projector& p) {
    SpanTracker& t = sync(p);
    if (t.rank() == 0) throw InvalidInput("ExactOracle: projector has rank 0");
    OracleAnswer ans;
    Spectrum s = eig_sym(SymMatrix(t.restricted()));
    const double scale = std::max(1.0, m_.frob_norm());
    if (s.lambda(0) <= 1e-12 * scale) {
        ans.u = t.basis().col(0);
        ans.null_residual_space = true;
        ans.achieved_epsilon = 0.0;
    } else {
        ans.u = t.lift(s.eigenvectors.col(0));
        ans.achieved_epsilon = 0.0;
    }
    ans.u /= ans.u.norm();
    pending_ = ans.u;
    return ans;
}

OracleAnswer PowerOracle::extract(const Projector& p) {
    SpanTracker& t = sync(p);
    if (t.rank() == 0) throw InvalidInput("PowerOracle: projector has rank 0");
    const int r = t.rank();
    OracleAnswer ans;
    ans.certified_gamma = gamma_;

    Spectrum s = eig_sym(SymMatrix(t.restricted()));
    const double scale = std::max(1.0, m_.frob_norm());
    ++call_;
    if (s.lambda(0) <= 1e-12 * scale) {
        ans.u = t.basis().col(0);
        ans.null_residual_space = true;
        ans.certified_delta = 0.0;
        pending_ = ans.u;
        return ans;
    }
    const double threshold = (1.0 - gamma_) * s.lambda(0);
    int small_from = 0;
    while (small_from < r && s.lambda(small_from) >= threshold) ++small_from;

    // iterate in the eigenbasis of the compression: contraction and the
    // leakage certificate are both diagonal there
    Rng rng(mix_seed(seed_, static_cast<std::uint64_t>(call_)));
    Vector w(r);
    for (int i = 0; i < r; ++i) w(i) = rng.gaussian();
    w /= w.norm();

    double mass = (small_from >= r) ? 0.0 : w.tail(r - small_from).squaredNorm();
    long it = 0;
    while (mass > delta_ && it < max_iters_) {
        w = s.eigenvalues.asDiagonal() * w;
        double n = w.norm();
        if (n <= 1e-300) throw Error("PowerOracle: iterate collapsed");
        w /= n;
        ++it;
        mass = (small_from >= r) ? 0.0 : w.tail(r - small_from).squaredNorm();
    }
    if (mass > delta_)
        throw BudgetExhausted("PowerOracle: " + std::to_string(max_iters_) +
                                  " iterations reached leakage " + std::to_string(mass) +
                                  " > " + std::to_string(delta_),
                              mass);
    ans.iterations = static_cast<int>(it);
    ans.certified_delta = mass;
    Vector coeffs = s.eigenvectors.mat() * w;
    ans.u = t.lift(coeffs);
    ans.u /= ans.u.norm();
    ans.achieved_epsilon = 1.0 - (w.array().square() * s.eigenvalues.array()).sum() / s.lambda(0);
    pending_ = ans.u;
    return ans;
}

OracleAnswer AdversarialEpsOracle::extract(const Projector& p) {
    SpanTracker& t = sync(p);
    if (t.rank() == 0) throw InvalidInput("AdversarialEpsOracle: projector has rank 0");
    const int r = t.rank();
    OracleAnswer ans;
    Spectrum s = eig_sym(SymMatrix(t.restricted()));
    const double scale = std::max(1.0, m_.frob_norm());
    if (s.lambda(0) <= 1e-12 * scale) {
        ans.u = t.basis().col(0);
        ans.null_residual_space = true;
        ans.achieved_epsilon = 0.0;
        pending_ = ans.u;
        return ans;
    }
    if (r == 1) {
        ans.u = t.lift(s.eigenvectors.col(0));
        ans.u /= ans.u.norm();
        ans.achieved_epsilon = 0.0;
        pending_ = ans.u;
        return ans;
    }
    const double l1 = s.lambda(0);
    const double lr = s.lambda(r - 1);
    // mixing weight that makes the energy deficit exactly eps * l1 when the
    // spread allows it; otherwise saturate at the worst direction available
    double share = 0.0;
    if (l1 - lr > 1e-15 * std::abs(l1)) share = std::min(1.0, eps_ * l1 / (l1 - lr));
    Vector coords = std::sqrt(1.0 - share) * s.eigenvectors.col(0) +
                    std::sqrt(share) * s.eigenvectors.col(r - 1);
    ans.u = t.lift(coords);
    ans.u /= ans.u.norm();
    ans.achieved_epsilon = 1.0 - ((1.0 - share) * l1 + share * lr) / l1;
    pending_ = ans.u;
    return ans;
}

OracleAnswer ScriptedOracle::extract(const Projector& p) {
    if (next_ >= answers_.size())
        throw InvalidInput("ScriptedOracle: no answer scripted for call " +
                           std::to_string(next_ + 1));
    OracleAnswer ans;
    ans.u = answers_[next_++];
    if (ans.u.size() != p.dim()) throw OracleContractViolation("ScriptedOracle: wrong dimension");
    if (std::abs(ans.u.norm() - 1.0) > tol::kUnitNorm)
        throw OracleContractViolation("ScriptedOracle: scripted answer is not unit");
    if (p.span_residual(ans.u) > tol::kSpanResidual)
        throw OracleContractViolation("ScriptedOracle: scripted answer leaves span(P) at call " +
                                      std::to_string(next_));
    return ans;
}

}  // namespace pcalab
