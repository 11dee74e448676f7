#include "pcalab/deflation.hpp"

#include <cmath>

#include <json.hpp>

namespace pcalab {

namespace {

int ceil_log2(int k) {
    int levels = 0;
    int span = 1;
    while (span < k) {
        span *= 2;
        ++levels;
    }
    return levels;
}

}  // namespace

DeflationTrace black_box_pca(int d, int k, OneOracle& oracle, const SymMatrix* certify) {
    if (d < 1) throw InvalidInput("black_box_pca: d < 1");
    if (k < 1 || k > d) throw InvalidInput("black_box_pca: k out of [1, d]");
    if (certify && certify->dim() != d) throw InvalidInput("black_box_pca: certify dim mismatch");

    DeflationTrace trace;
    trace.d = d;
    trace.k = k;
    trace.oracle_name = oracle.name();
    trace.u = Matrix(d, k);

    Projector p = Projector::identity(d);
    std::optional<SpanTracker> cert_tracker;
    if (certify) cert_tracker.emplace(*certify, p);

    for (int i = 1; i <= k; ++i) {
        OracleAnswer ans = oracle.extract(p);
        if (ans.u.size() != d)
            throw OracleContractViolation("black_box_pca: step " + std::to_string(i) +
                                          ": answer has wrong dimension");
        const double norm = ans.u.norm();
        if (std::abs(norm - 1.0) > tol::kUnitNorm)
            throw OracleContractViolation("black_box_pca: step " + std::to_string(i) +
                                          ": answer norm " + std::to_string(norm));
        Vector u_raw = ans.u / norm;
        if (p.span_residual(u_raw) > tol::kSpanResidual)
            throw OracleContractViolation("black_box_pca: step " + std::to_string(i) +
                                          ": answer leaves span(P)");
        // snap onto span(P): keeps the assembled frame orthonormal to working
        // precision even when the oracle used its full 1e-8 slack
        Vector u = p.apply(u_raw);
        u /= u.norm();

        DeflationStep step;
        step.index = i;
        step.rank_before = p.rank();
        step.u = u;
        step.oracle_iterations = ans.iterations;
        step.certified_delta = ans.certified_delta;
        step.certified_gamma = ans.certified_gamma;
        step.null_residual_space = ans.null_residual_space;
        step.budget_warning = ans.budget_warning;
        if (certify) {
            Spectrum rs = eig_sym(SymMatrix(cert_tracker->restricted()));
            const double l1 = rs.lambda(0);
            step.residual_lambda1 = l1;
            const double energy = u.dot(certify->mat() * u);
            step.call_epsilon =
                (l1 <= 1e-12 * std::max(1.0, certify->frob_norm())) ? 0.0 : 1.0 - energy / l1;
            cert_tracker->remove(u);
        }
        trace.steps.push_back(std::move(step));
        trace.u.col(i - 1) = u;
        p = deflate_projector(p, u);
    }

    const double cross =
        (trace.u.transpose() * trace.u - Matrix::Identity(k, k)).cwiseAbs().maxCoeff();
    if (cross > 1e-8)
        throw OracleContractViolation("black_box_pca: assembled frame not orthonormal (" +
                                      std::to_string(cross) + ")");
    return trace;
}

EpcaVerdict verify_epca_theorem(const SymMatrix& m, int k, OneOracle& oracle, double eps) {
    if (eps < 0.0 || eps >= 1.0) throw InvalidInput("verify_epca_theorem: eps in [0, 1)");
    EpcaVerdict v;
    v.eps = eps;
    v.trace = black_box_pca(m.dim(), k, oracle, &m);
    for (const DeflationStep& s : v.trace.steps) {
        if (s.call_epsilon > eps + 1e-12)
            throw PrecondUnmet("verify_epca_theorem: call " + std::to_string(s.index) +
                               " measured error " + std::to_string(s.call_epsilon) +
                               " exceeds advertised " + std::to_string(eps));
    }
    v.report = epca_error(m, v.trace.frame());
    v.epsilon_achieved = v.report.epsilon;
    v.pass = v.epsilon_achieved <= eps + 1e-8;
    return v;
}

OracleBudget derive_oracle_budget(double Delta, double Gamma, int k) {
    if (k < 1) throw InvalidInput("derive_oracle_budget: k < 1");
    if (Delta <= 0.0 || Gamma <= 0.0 || Gamma >= 1.0)
        throw InvalidInput("derive_oracle_budget: need Delta > 0 and Gamma in (0, 1)");
    OracleBudget b;
    b.levels = ceil_log2(k);
    const double k2 = static_cast<double>(k) * k;
    b.delta_bar = Delta / (640.0 * k2);
    b.delta_prime = b.delta_bar / (18.0 * k2);
    b.delta = b.delta_prime / std::pow(132.0 * k2, b.levels);
    b.gamma_bar = Gamma / (10.0 * k);
    b.gamma_prime = b.gamma_bar / (2.0 * k);
    b.gamma = b.gamma_prime / std::pow(2.0, b.levels);
    return b;
}

CpcaVerdict verify_cpca_theorem(const SymMatrix& m, int k, double Delta, double Gamma,
                                const OracleFactory& factory) {
    CpcaVerdict v;
    v.Delta = Delta;
    v.Gamma = Gamma;
    const double kappa = cond_k(m, k);  // throws SingularTopSpace when undefined
    if (Delta * kappa * kappa > Gamma * Gamma)
        throw RegimeRejected("verify_cpca_theorem: Delta * kappa^2 = " +
                             std::to_string(Delta * kappa * kappa) + " exceeds Gamma^2 = " +
                             std::to_string(Gamma * Gamma));
    v.budget = derive_oracle_budget(Delta, Gamma, k);
    std::unique_ptr<OneOracle> oracle = factory(v.budget.delta, v.budget.gamma);
    v.trace = black_box_pca(m.dim(), k, *oracle, &m);
    for (const DeflationStep& s : v.trace.steps) {
        if (!std::isnan(s.certified_delta) && s.certified_delta > v.budget.delta + 1e-15)
            throw PrecondUnmet("verify_cpca_theorem: call " + std::to_string(s.index) +
                               " certificate " + std::to_string(s.certified_delta) +
                               " exceeds budget " + std::to_string(v.budget.delta));
    }
    v.mass = cpca_mass(m, v.trace.frame(), Gamma).mass;
    v.pass = v.mass <= Delta + 1e-8;
    return v;
}

std::vector<int> gap_buckets(const Spectrum& s, int k, double gamma_bar) {
    if (k < 1 || k > s.dim()) throw InvalidInput("gap_buckets: k out of [1, d]");
    if (gamma_bar < 0.0 || gamma_bar >= 1.0)
        throw InvalidInput("gap_buckets: gamma_bar must be in [0, 1)");
    std::vector<int> ends;
    for (int i = 1; i <= std::min(k - 1, s.dim() - 1); ++i) {
        if (s.lambda(i) < (1.0 - gamma_bar) * s.lambda(i - 1)) ends.push_back(i);
    }
    ends.push_back(k);
    return ends;
}

namespace {

struct NodeResult {
    double gamma = 0.0;
    double bound = 0.0;
    int first = 0;
    int last = 0;
};

// Measured leakage of the block of directions (first, last] against the
// residual matrix the block started from.
double block_mass(const std::vector<SymMatrix>& residuals, const DeflationTrace& trace, int first,
                  int last, double gamma) {
    Matrix block = trace.u.middleCols(first, last - first);
    return cpca_mass(residuals[first], Frame(block), gamma).mass;
}

NodeResult audit_tree(const std::vector<SymMatrix>& residuals, const DeflationTrace& trace,
                      int first, int last, double delta_in, double gamma_in,
                      std::vector<AuditNode>& nodes) {
    if (last - first == 1) {
        AuditNode n;
        n.first = first;
        n.last = last;
        n.leaf = true;
        n.gamma = gamma_in;
        n.bound = delta_in;
        n.measured = block_mass(residuals, trace, first, last, gamma_in);
        n.pass = n.measured <= n.bound + 1e-8;
        nodes.push_back(n);
        return {gamma_in, delta_in, first, last};
    }
    int half = 1;
    while (half * 2 < last - first) half *= 2;
    NodeResult l = audit_tree(residuals, trace, first, first + half, delta_in, gamma_in, nodes);
    NodeResult r = audit_tree(residuals, trace, first + half, last, delta_in, gamma_in, nodes);
    AuditNode n;
    n.first = first;
    n.last = last;
    n.gamma = std::max(l.gamma, 2.0 * r.gamma);
    n.bound = 130.0 * static_cast<double>(half) * half * l.bound + 2.0 * r.bound;
    n.measured = block_mass(residuals, trace, first, last, n.gamma);
    n.pass = n.measured <= n.bound + 1e-8;
    nodes.push_back(n);
    return {n.gamma, n.bound, first, last};
}

}  // namespace

AuditReport dyadic_merge_audit(const SymMatrix& m, const DeflationTrace& trace, double delta_in,
                               double gamma_in, const std::vector<int>& bucket_ends) {
    if (trace.k < 1 || trace.u.cols() != trace.k)
        throw InvalidInput("dyadic_merge_audit: empty or inconsistent trace");
    if (bucket_ends.empty() || bucket_ends.back() != trace.k)
        throw InvalidInput("dyadic_merge_audit: bucket ends must finish at k");
    if (delta_in < 0.0 || gamma_in <= 0.0 || gamma_in >= 0.5)
        throw InvalidInput("dyadic_merge_audit: need delta_in >= 0, gamma_in in (0, 0.5)");

    // residuals[i] = P_i M P_i with P_i the projector after i accepted steps
    std::vector<SymMatrix> residuals;
    residuals.reserve(trace.k);
    residuals.push_back(m);
    const int d = m.dim();
    Matrix p = Matrix::Identity(d, d);
    for (int i = 0; i + 1 < trace.k; ++i) {
        p -= trace.u.col(i) * trace.u.col(i).transpose();
        residuals.emplace_back(p * m.mat() * p);
    }

    AuditReport report;

    // per-bucket trees with the no-gap merge rule
    std::vector<NodeResult> roots;
    int start = 0;
    int max_bucket = 1;
    for (std::size_t j = 0; j < bucket_ends.size(); ++j) {
        int end = bucket_ends[j];
        if (end <= start) throw InvalidInput("dyadic_merge_audit: bucket ends not increasing");
        roots.push_back(
            audit_tree(residuals, trace, start, end, delta_in, gamma_in, report.nodes));
        max_bucket = std::max(max_bucket, end - start);

        KappaCheck kc;
        kc.bucket = static_cast<int>(j) + 1;
        kc.first = start;
        kc.last = end;
        Spectrum rs = eig_sym(residuals[start]);
        const double lk = rs.lambda(end - start - 1);
        kc.kappa = (lk <= 1e-14) ? std::numeric_limits<double>::infinity()
                                 : rs.lambda(0) / lk;
        kc.pass = kc.kappa <= 2.0 + 1e-9;
        report.kappa.push_back(kc);
        start = end;
    }

    // fold bucket roots with the gapped merge rule, left to right dyadically
    while (roots.size() > 1) {
        std::vector<NodeResult> next;
        for (std::size_t i = 0; i + 1 < roots.size(); i += 2) {
            const NodeResult& l = roots[i];
            const NodeResult& r = roots[i + 1];
            AuditNode n;
            n.first = l.first;
            n.last = r.last;
            n.gapped = true;
            n.gamma = std::max(l.gamma, 2.0 * r.gamma);
            n.bound = 2.0 * (l.bound + r.bound);
            n.measured = block_mass(residuals, trace, n.first, n.last, n.gamma);
            n.pass = n.measured <= n.bound + 1e-8;
            report.nodes.push_back(n);
            next.push_back({n.gamma, n.bound, n.first, n.last});
        }
        if (roots.size() % 2 == 1) next.push_back(roots.back());
        roots.swap(next);
    }

    report.root_gamma = roots[0].gamma;
    report.root_bound = roots[0].bound;
    report.root_measured = block_mass(residuals, trace, 0, trace.k, roots[0].gamma);

    report.bucket_closed_form =
        std::pow(132.0 * static_cast<double>(max_bucket) * max_bucket, ceil_log2(max_bucket)) *
        std::max(delta_in, 1e-300);
    const double r_buckets = static_cast<double>(bucket_ends.size());
    report.merge_closed_form = 4.0 * r_buckets * r_buckets * report.bucket_closed_form;

    report.all_pass = true;
    for (const AuditNode& n : report.nodes) report.all_pass = report.all_pass && n.pass;
    return report;
}

// --- JSON serialization -----------------------------------------------------

namespace {

nlohmann::ordered_json step_to_json(const DeflationStep& s) {
    nlohmann::ordered_json j;
    j["index"] = s.index;
    j["rank_before"] = s.rank_before;
    j["u"] = std::vector<double>(s.u.data(), s.u.data() + s.u.size());
    j["oracle_iterations"] = s.oracle_iterations;
    j["residual_lambda1"] = s.residual_lambda1;
    j["call_epsilon"] = s.call_epsilon;
    j["certified_delta"] = s.certified_delta;
    j["certified_gamma"] = s.certified_gamma;
    j["null_residual_space"] = s.null_residual_space;
    j["budget_warning"] = s.budget_warning;
    return j;
}

}  // namespace

std::string DeflationTrace::to_json() const {
    nlohmann::ordered_json j;
    j["d"] = d;
    j["k"] = k;
    j["oracle"] = oracle_name;
    j["steps"] = nlohmann::ordered_json::array();
    for (const DeflationStep& s : steps) j["steps"].push_back(step_to_json(s));
    return j.dump(2);
}

DeflationTrace DeflationTrace::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    DeflationTrace t;
    t.d = j.at("d").get<int>();
    t.k = j.at("k").get<int>();
    t.oracle_name = j.value("oracle", "");
    t.u = Matrix(t.d, t.k);
    // NaN diagnostics serialize as JSON null; map them back
    auto jget = [](const nlohmann::json& js, const char* key) {
        if (!js.contains(key) || js.at(key).is_null())
            return std::numeric_limits<double>::quiet_NaN();
        return js.at(key).get<double>();
    };
    int col = 0;
    for (const auto& js : j.at("steps")) {
        DeflationStep s;
        s.index = js.at("index").get<int>();
        s.rank_before = js.at("rank_before").get<int>();
        std::vector<double> u = js.at("u").get<std::vector<double>>();
        if (static_cast<int>(u.size()) != t.d)
            throw InvalidInput("DeflationTrace::from_json: step vector has wrong length");
        s.u = Eigen::Map<Vector>(u.data(), t.d);
        s.oracle_iterations = js.value("oracle_iterations", 0);
        s.residual_lambda1 = jget(js, "residual_lambda1");
        s.call_epsilon = jget(js, "call_epsilon");
        s.certified_delta = jget(js, "certified_delta");
        s.certified_gamma = jget(js, "certified_gamma");
        s.null_residual_space = js.value("null_residual_space", false);
        s.budget_warning = js.value("budget_warning", false);
        if (col >= t.k) throw InvalidInput("DeflationTrace::from_json: too many steps");
        t.u.col(col++) = s.u;
        t.steps.push_back(std::move(s));
    }
    if (col != t.k) throw InvalidInput("DeflationTrace::from_json: missing steps");
    return t;
}

std::string AuditReport::to_json() const {
    nlohmann::ordered_json j;
    j["root_measured"] = root_measured;
    j["root_bound"] = root_bound;
    j["root_gamma"] = root_gamma;
    j["bucket_closed_form"] = bucket_closed_form;
    j["merge_closed_form"] = merge_closed_form;
    j["all_pass"] = all_pass;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const AuditNode& n : nodes) {
        nlohmann::ordered_json jn;
        jn["first"] = n.first;
        jn["last"] = n.last;
        jn["leaf"] = n.leaf;
        jn["gapped"] = n.gapped;
        jn["gamma"] = n.gamma;
        jn["measured"] = n.measured;
        jn["bound"] = n.bound;
        jn["pass"] = n.pass;
        j["nodes"].push_back(jn);
    }
    j["kappa"] = nlohmann::ordered_json::array();
    for (const KappaCheck& kc : kappa) {
        nlohmann::ordered_json jk;
        jk["bucket"] = kc.bucket;
        jk["first"] = kc.first;
        jk["last"] = kc.last;
        jk["kappa"] = kc.kappa;
        jk["pass"] = kc.pass;
        j["kappa"].push_back(jk);
    }
    return j.dump(2);
}

}  // namespace pcalab
