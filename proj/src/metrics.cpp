#include "pcalab/metrics.hpp"

#include <cmath>

namespace pcalab {

EpcaReport epca_error(const SymMatrix& m, const Frame& u) {
    const int k = u.cols();
    if (k < 1 || k > m.dim()) throw InvalidInput("epca_error: U must have 1..d columns");
    if (u.dim() != m.dim()) throw InvalidInput("epca_error: dimension mismatch");
    Spectrum s = eig_sym(m);
    const double kf = ky_fan(s, k);
    if (kf <= 1e-14)
        throw DegenerateTarget("epca_error: ||M||_k = " + std::to_string(kf));
    const double energy = (u.mat().transpose() * m.mat() * u.mat()).trace();
    return {k, energy, kf, 1.0 - energy / kf};
}

CpcaReport cpca_mass(const SymMatrix& m, const Frame& u, double gamma) {
    const int k = u.cols();
    if (k < 1 || k > m.dim()) throw InvalidInput("cpca_mass: U must have 1..d columns");
    if (u.dim() != m.dim()) throw InvalidInput("cpca_mass: dimension mismatch");
    if (gamma < 0.0 || gamma >= 1.0) throw InvalidInput("cpca_mass: gamma must be in [0, 1)");
    Spectrum s = eig_sym(m);
    const double threshold = (1.0 - gamma) * s.lambda(k - 1);
    auto [ge, lt] = eigenspace_split(s, threshold);
    const double mass =
        (lt.cols() == 0) ? 0.0 : (lt.mat().transpose() * u.mat()).squaredNorm();
    return {k, gamma, threshold, mass, lt.cols()};
}

double etoc_convert(const SymMatrix& m, int k, double eps, double gamma) {
    if (k < 1 || k > m.dim()) throw InvalidInput("etoc_convert: k out of [1, d]");
    if (eps < 0.0) throw InvalidInput("etoc_convert: eps < 0");
    if (gamma <= 0.0 || gamma >= 1.0) throw InvalidInput("etoc_convert: gamma must be in (0, 1)");
    Spectrum s = eig_sym(m);
    const double lk = s.lambda(k - 1);
    if (lk <= 1e-14) throw SingularTopSpace("etoc_convert: lambda_k = " + std::to_string(lk));
    return eps * ky_fan(s, k) / (gamma * lk);
}

double ctoe_convert(double delta, double gamma) {
    if (delta < 0.0 || gamma < 0.0) throw InvalidInput("ctoe_convert: negative parameter");
    if (gamma >= 1.0) throw InvalidInput("ctoe_convert: gamma must be < 1");
    return gamma + delta;
}

WedinReport wedin_residual(const SymMatrix& m, const Frame& u, double gamma, double gamma2) {
    const int d = m.dim();
    const int k1 = u.cols();
    if (k1 < 1 || k1 >= d) throw InvalidInput("wedin_residual: U must have 1..d-1 columns");
    if (u.dim() != d) throw InvalidInput("wedin_residual: dimension mismatch");
    if (gamma < 0.0 || gamma >= 1.0 || gamma2 < 0.0 || gamma2 >= 1.0)
        throw InvalidInput("wedin_residual: gamma parameters must be in [0, 1)");

    const int k = std::min(2 * k1, d);
    const int k2 = std::min(k1, d - k1);

    Spectrum sm = eig_sym(m);
    const double thr_m = (1.0 - gamma) * sm.lambda(k - 1);
    auto [lf, sf] = eigenspace_split(sm, thr_m);
    const int nl = lf.cols();
    Vector lam = sm.eigenvalues.head(nl);

    const Matrix& um = u.mat();
    Matrix residual_proj = Matrix::Identity(d, d) - um * um.transpose();
    SymMatrix mt(residual_proj * m.mat() * residual_proj);
    Spectrum st = eig_sym(mt);
    const double thr_t = (1.0 - gamma2) * st.lambda(k2 - 1);
    auto [ltf, stf] = eigenspace_split(st, thr_t);
    (void)stf;
    const int ntl = ltf.cols();
    Vector lam_t = st.eigenvalues.head(ntl);
    if (ntl == 0 || lam_t.minCoeff() <= 1e-12 * std::max(1.0, st.lambda(0)))
        throw DegenerateResidual("wedin_residual: selected residual block is singular");

    if (sf.cols() == 0) return {0.0, 1.0};  // no small side, identity is vacuous

    const Matrix& s = sf.mat();
    const Matrix& l = lf.mat();
    const Matrix& lt = ltf.mat();

    Matrix lhs = s.transpose() * lt;
    Matrix lam_t_inv = lam_t.cwiseInverse().asDiagonal();
    Vector sig = sm.eigenvalues.tail(sf.cols());
    Matrix stu = s.transpose() * um;                 // S^T U
    Matrix first = (Matrix::Identity(sf.cols(), sf.cols()) - stu * stu.transpose()) *
                   Matrix(sig.asDiagonal()) * (s.transpose() * lt) * lam_t_inv;
    Matrix second = stu * (um.transpose() * l) * Matrix(lam.asDiagonal()) *
                    (l.transpose() * lt) * lam_t_inv;
    double res = (lhs - (first - second)).norm();
    double scale = std::max(1.0, std::abs(sm.lambda(0)) / lam_t.minCoeff());
    return {res, scale};
}

ComposeReport compose_bound(const SymMatrix& m, const Frame& u1, const Frame& u2,
                            double delta1, double delta2, double gamma1, double gamma2) {
    const int d = m.dim();
    const int k1 = u1.cols();
    const int k2 = u2.cols();
    if (k1 < 1 || k2 < 1 || k1 + k2 > d)
        throw InvalidInput("compose_bound: need 1 <= k1, k2 with k1 + k2 <= d");
    if (u1.dim() != d || u2.dim() != d) throw InvalidInput("compose_bound: dimension mismatch");
    if (delta1 < 0.0 || delta2 < 0.0 || gamma1 < 0.0 || gamma2 <= 0.0)
        throw InvalidInput("compose_bound: negative parameter (gamma2 must be positive)");
    if (delta1 > 0.1 || delta2 > 0.1 || gamma1 > 0.1 || gamma2 > 0.1)
        throw PrecondUnmet("compose_bound: all of delta1, delta2, gamma1, gamma2 must be <= 1/10");
    const double cross_orth = (u1.mat().transpose() * u2.mat()).cwiseAbs().maxCoeff();
    if (cross_orth > 1e-8)
        throw OracleContractViolation("compose_bound: U2 not orthogonal to U1 (max overlap " +
                                      std::to_string(cross_orth) + ")");

    const int k = k1 + k2;
    const double gamma = std::max(gamma1, 2.0 * gamma2);

    Spectrum sm = eig_sym(m);
    const double lk = sm.lambda(k - 1);
    if (lk <= 1e-14) throw SingularTopSpace("compose_bound: lambda_k = " + std::to_string(lk));
    auto [lf, sf] = eigenspace_split(sm, (1.0 - gamma) * lk);
    Vector lam = sm.eigenvalues.head(lf.cols());

    const Matrix& um1 = u1.mat();
    Matrix proj = Matrix::Identity(d, d) - um1 * um1.transpose();
    SymMatrix mt(proj * m.mat() * proj);
    Spectrum st = eig_sym(mt);
    const double lk2 = st.lambda(k2 - 1);
    if (lk2 <= 1e-14)
        throw DegenerateResidual("compose_bound: residual lambda_k2 = " + std::to_string(lk2));
    auto [ltf, stf] = eigenspace_split(st, (1.0 - gamma2) * lk2);
    (void)stf;

    Matrix coupling = um1.transpose() * lf.mat() * Matrix(lam.asDiagonal()) *
                      (lf.mat().transpose() * ltf.mat());
    double sigma = 0.0;
    if (coupling.size() > 0) {
        Matrix g = (coupling.rows() <= coupling.cols())
                       ? Matrix(coupling * coupling.transpose())
                       : Matrix(coupling.transpose() * coupling);
        sigma = std::sqrt(std::max(0.0, eig_sym(SymMatrix(g)).lambda(0)));
    }
    const double cross_term = (4.0 * delta1 / (gamma2 * gamma2)) * (sigma * sigma) / (lk * lk);
    return {delta1 + 2.0 * delta2 + cross_term, gamma, k, cross_term};
}

HeadGuarantee find_head_index(const SymMatrix& m_residual, int m, double gamma) {
    const int d = m_residual.dim();
    if (m < 1 || m > d) throw InvalidInput("find_head_index: m out of [1, d]");
    if (gamma <= 0.0 || gamma > 0.1)
        throw InvalidInput("find_head_index: gamma must be in (0, 1/10]");
    if (m * gamma > 0.5)
        throw PrecondUnmet("find_head_index: m * gamma must be <= 1/2 for the ratio bound");
    Spectrum s = eig_sym(m_residual);
    const double lm = s.lambda(m - 1);
    if (lm <= 1e-14)
        throw DegenerateTarget("find_head_index: lambda_m = " + std::to_string(lm));

    int h = 0;
    for (int c = m - 1; c >= 1; --c) {
        if (s.lambda(c) <= (1.0 - gamma) * s.lambda(c - 1)) {  // 0-based: lambda_{c+1} vs lambda_c
            h = c;
            break;
        }
    }
    // ratio checks are consequences of maximality; a failure is an internal bug
    const double ratio = s.lambda(h) / lm;
    const double chain = std::pow(1.0 - gamma, -(m - h - 1));
    if (ratio > chain * (1.0 + 1e-12))
        throw Error("find_head_index: ratio chain violated");
    const double omega = 2.0 * m * gamma;
    if (chain > 1.0 + omega + 1e-12)
        throw Error("find_head_index: ratio bound 1 + 2 m gamma violated");
    return {h, omega, 0.0};
}

double deflated_opnorm_diff(const SymMatrix& m, const Frame& u, const Frame& v) {
    const int d = m.dim();
    if (u.dim() != d || v.dim() != d)
        throw InvalidInput("deflated_opnorm_diff: dimension mismatch");
    Matrix pu = Matrix::Identity(d, d) - u.mat() * u.mat().transpose();
    Matrix pv = Matrix::Identity(d, d) - v.mat() * v.mat().transpose();
    SymMatrix diff(pu * m.mat() * pu - pv * m.mat() * pv);
    Spectrum s = eig_sym(diff);
    return std::max(std::abs(s.lambda(0)), std::abs(s.lambda(d - 1)));
}

}  // namespace pcalab
