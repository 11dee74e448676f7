#include "pcalab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "pcalab/adversarial.hpp"
#include "pcalab/deflation.hpp"
#include "pcalab/linalg.hpp"
#include "pcalab/metrics.hpp"
#include "pcalab/online.hpp"
#include "pcalab/oracles.hpp"
#include "pcalab/rand.hpp"
#include "pcalab/robust.hpp"

namespace pcalab {
namespace harness {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

// Resolved per-trial inputs after merging CLI values with experiment defaults.
struct Resolved {
    int d = 0;
    int k = 0;
    double eps = 0.0;
    double delta = 0.0;
    double gamma = 0.0;
    double Delta = 0.0;
    double Gamma = 0.0;
    std::int64_t n = 0;
};

double pick(double flag, double fallback) { return flag >= 0.0 ? flag : fallback; }
int pick(int flag, int fallback) { return flag > 0 ? flag : fallback; }

constexpr double kMarkerless = -1.0;

ResultRow make_row(const std::string& experiment, std::uint64_t seed, const Resolved& r,
                   nlohmann::ordered_json params, double measured, double bound, double tolerance,
                   bool expected_fail, bool construction_ok = true) {
    ResultRow row;
    row.experiment = experiment;
    row.seed = seed;
    row.d = r.d;
    row.k = r.k;
    row.measured = measured;
    row.bound = bound;
    if (expected_fail) {
        params["marker"] = "EXPECTED-FAIL-OF-REDUCTION";
        row.expected_fail = true;
        row.pass = construction_ok;
    } else {
        row.pass = measured <= bound + tolerance;
    }
    if (tolerance != kMarkerless) params["tolerance"] = tolerance;
    row.param_json = params.dump();
    return row;
}

SymMatrix spiked_reference(int d, std::uint64_t seed) {
    Vector evals = Vector::Ones(d);
    evals(0) = 4.0;
    evals(1) = 3.0;
    SpectrumSpec spec;
    spec.kind = "custom";
    spec.d = d;
    spec.custom = evals;
    return spectrum_gen(spec, seed);
}

// ---------------------------------------------------------------------------
// experiment trial bodies (one row per seed)
// ---------------------------------------------------------------------------

ResultRow trial_epca_lossless(const Resolved& r, std::uint64_t seed) {
    Rng rng(mix_seed(seed, 11));
    SymMatrix m = random_psd(rng, r.d, 0.05, 2.0);
    AdversarialEpsOracle oracle(m, r.eps);
    DeflationTrace trace = black_box_pca(r.d, r.k, oracle);
    const double measured = epca_error(m, trace.frame()).epsilon;
    nlohmann::ordered_json pj{{"eps", r.eps}};
    return make_row("epca-lossless", seed, r, pj, measured, r.eps, 1e-8, false);
}

ResultRow trial_cpca_valid(const Resolved& r, std::uint64_t seed) {
    SpectrumSpec spec;
    spec.kind = "geometric";
    spec.d = r.d;
    spec.ratio = 0.9;
    SymMatrix m = spectrum_gen(spec, mix_seed(seed, 21));
    const double kappa = cond_k(m, r.k);
    const double Delta = r.Delta > 0.0 ? r.Delta : r.Gamma * r.Gamma / (64.0 * kappa * kappa);
    OracleFactory factory = [&m, seed](double delta, double gamma) {
        return std::make_unique<PowerOracle>(m, delta, gamma, mix_seed(seed, 22));
    };
    CpcaVerdict v = verify_cpca_theorem(m, r.k, Delta, r.Gamma, factory);
    nlohmann::ordered_json pj{{"Gamma", r.Gamma}, {"Delta", Delta}, {"kappa_k", kappa}};
    return make_row("cpca-valid-regime", seed, r, pj, v.mass, Delta, 0.0, false);
}

ResultRow trial_invalid_regime(const Resolved& r, std::uint64_t seed) {
    RegimeInstance inst = build_sqrt_regime_instance(r.Delta);
    ScriptedOracle oracle(inst.answers);
    DeflationTrace trace = black_box_pca(3, 2, oracle);
    const double measured = cpca_mass(inst.m, trace.frame(), inst.Gamma).mass;
    const bool construction_ok =
        measured > inst.Delta && std::abs(measured - inst.predicted_mass) <= 1e-9;
    Resolved fixed = r;
    fixed.d = 3;
    fixed.k = 2;
    nlohmann::ordered_json pj{{"instance", "sqrt"},
                              {"Delta", inst.Delta},
                              {"Gamma", inst.Gamma},
                              {"predicted_mass", inst.predicted_mass}};
    return make_row("invalid-regime", seed, fixed, pj, measured, inst.Delta, kMarkerless, true,
                    construction_ok);
}

ResultRow trial_robust(const std::string& name, bool heavy_tailed, const Resolved& r,
                       std::uint64_t seed) {
    SpectrumSpec spec;
    spec.kind = "geometric";
    spec.d = r.d;
    spec.ratio = 0.9;
    SymMatrix sigma = spectrum_gen(spec, mix_seed(seed, 31));
    Matrix clean = heavy_tailed ? sampler_hypercontractive(4.0, 2.0, sigma, static_cast<int>(r.n),
                                                           mix_seed(seed, 32))
                                : sampler_subgaussian(sigma, static_cast<int>(r.n),
                                                      mix_seed(seed, 32));
    Rng rng(mix_seed(seed, 33));
    ContaminatedSample sample = corrupt(clean, r.eps, CorruptStrategy::kLargeSpike, rng);
    Frame u = robust_kpca(sample.points, r.eps, r.gamma, r.k);
    const double measured = epca_error(sigma, u).epsilon;
    const double bound = 10.0 * r.eps * std::log(1.0 / r.eps);
    nlohmann::ordered_json pj{
        {"eps", r.eps}, {"gamma", r.gamma}, {"n", r.n}, {"strategy", "large-spike"}};
    return make_row(name, seed, r, pj, measured, bound, 1e-8, false);
}

ResultRow trial_online_oja(const Resolved& r, std::uint64_t seed) {
    SymMatrix sigma = spiked_reference(r.d, mix_seed(seed, 41));
    StreamConfig cfg;
    cfg.n = r.n;
    cfg.d = r.d;
    cfg.k = r.k;
    cfg.Delta = r.Delta;
    cfg.Gamma = r.Gamma;
    cfg.p = 4.0;
    cfg.cp = 2.0;
    cfg.beta = 0.1;
    cfg.kappa_k = 4.0 / 3.0;
    cfg.seed = seed;
    auto stream = make_hypercontractive_stream(cfg.p, cfg.cp, sigma, cfg.n, seed * 77 + 5);
    OnlineResult res = online_kcpca(*stream, cfg);
    const double measured = cpca_mass(sigma, res.u, cfg.Gamma).mass;
    nlohmann::ordered_json pj{{"Delta", cfg.Delta},
                              {"Gamma", cfg.Gamma},
                              {"n", cfg.n},
                              {"p", cfg.p},
                              {"cp", cfg.cp},
                              {"kappa_k", cfg.kappa_k}};
    return make_row("online-oja", seed, r, pj, measured, cfg.Delta, 0.0, false);
}

ResultRow trial_composition_audit(const Resolved& r, std::uint64_t seed) {
    SpectrumSpec spec;
    spec.kind = "geometric";
    spec.d = r.d;
    spec.ratio = 0.9;
    SymMatrix m = spectrum_gen(spec, mix_seed(seed, 51));
    PowerOracle oracle(m, r.delta, r.gamma, mix_seed(seed, 52));
    DeflationTrace trace = black_box_pca(r.d, r.k, oracle);
    Spectrum s = eig_sym(m);
    AuditReport audit = dyadic_merge_audit(m, trace, r.delta, r.gamma,
                                           gap_buckets(s, r.k, 0.2));
    nlohmann::ordered_json pj{{"delta", r.delta}, {"gamma", r.gamma}};
    ResultRow row = make_row("composition-audit", seed, r, pj, audit.root_measured,
                             audit.root_bound, 1e-8, false);
    row.pass = audit.all_pass;
    return row;
}

struct ExperimentDef {
    std::string name;
    std::string description;
    Resolved defaults;
    ResultRow (*trial)(const Resolved&, std::uint64_t);
};

ResultRow trial_robust_subg(const Resolved& r, std::uint64_t seed) {
    return trial_robust("robust-subg", false, r, seed);
}
ResultRow trial_robust_ht(const Resolved& r, std::uint64_t seed) {
    return trial_robust("robust-ht", true, r, seed);
}

const std::vector<ExperimentDef>& registry() {
    static const std::vector<ExperimentDef> defs = [] {
        std::vector<ExperimentDef> v;
        {
            ExperimentDef e;
            e.name = "epca-lossless";
            e.description =
                "Deflation with a saturating adversarial eps-oracle on random PSD targets; "
                "checks the captured-energy deficit of the k extracted directions never "
                "exceeds the per-call eps (defaults d=16, k=4, eps=0.1).";
            e.defaults = Resolved{16, 4, 0.1, 0, 0, 0, 0, 0};
            e.trial = &trial_epca_lossless;
            v.push_back(e);
        }
        {
            ExperimentDef e;
            e.name = "cpca-valid-regime";
            e.description =
                "Certified power oracles at the derived per-call budgets on a rotated "
                "geometric spectrum; checks combined low-eigenvalue mass stays within Delta "
                "when Delta * cond_k^2 <= Gamma^2 (defaults d=8, k=2, Gamma=0.2, Delta "
                "auto = Gamma^2 / (64 cond_k^2)).";
            e.defaults = Resolved{8, 2, 0, 0, 0, -1.0, 0.2, 0};
            e.trial = &trial_cpca_valid;
            v.push_back(e);
        }
        {
            ExperimentDef e;
            e.name = "invalid-regime";
            e.description =
                "Counterexample family on diag(2, 1, 1-2*Gamma) with compliant per-call "
                "answers whose combined mass exceeds Delta; rows carry the "
                "EXPECTED-FAIL-OF-REDUCTION marker and count as harness passes "
                "(default Delta=1e-4).";
            e.defaults = Resolved{3, 2, 0, 0, 0, 1e-4, 0, 0};
            e.trial = &trial_invalid_regime;
            v.push_back(e);
        }
        {
            ExperimentDef e;
            e.name = "robust-subg";
            e.description =
                "Quantile soft filter + deflation on Gaussian samples with an eps fraction "
                "replaced by a spike adversary; checks captured-energy deficit against the "
                "fitted cap 10 * eps * log(1/eps) (defaults d=16, k=2, eps=0.05, gamma=0.1, "
                "n = 20 d / (eps log(1/eps))^2).";
            e.defaults = Resolved{16, 2, 0.05, 0, 0.1, 0, 0, 0};
            e.trial = &trial_robust_subg;
            v.push_back(e);
        }
        {
            ExperimentDef e;
            e.name = "robust-ht";
            e.description =
                "Same filter pipeline on heavy-tailed hypercontractive samples (p=4, Cp=2) "
                "with the spike adversary and the same fitted cap (defaults d=16, k=2, "
                "eps=0.05, gamma=0.1).";
            e.defaults = Resolved{16, 2, 0.05, 0, 0.1, 0, 0, 0};
            e.trial = &trial_robust_ht;
            v.push_back(e);
        }
        {
            ExperimentDef e;
            e.name = "online-oja";
            e.description =
                "Single-pass clipped streaming deflation on a rotated spiked "
                "hypercontractive stream; checks low-eigenvalue mass against Delta at the "
                "calibrated sample size (defaults d=16, k=2, Delta=0.005, Gamma=0.5, "
                "n=40000).";
            e.defaults = Resolved{16, 2, 0, 0, 0, 0.005, 0.5, 40000};
            e.trial = &trial_online_oja;
            v.push_back(e);
        }
        {
            ExperimentDef e;
            e.name = "composition-audit";
            e.description =
                "Runs deflation with certified power oracles, then replays the trace "
                "through the dyadic merge audit; checks every merge node against its "
                "recursive bound (defaults d=8, k=3, delta=1e-9, gamma=1e-3).";
            e.defaults = Resolved{8, 3, 0, 1e-9, 1e-3, 0, 0, 0};
            e.trial = &trial_composition_audit;
            v.push_back(e);
        }
        return v;
    }();
    return defs;
}

const ExperimentDef& find_experiment(const std::string& name) {
    for (const auto& def : registry())
        if (def.name == name) return def;
    throw InvalidInput("unknown experiment: " + name);
}

}  // namespace

SymMatrix spectrum_gen(const SpectrumSpec& spec, std::uint64_t seed) {
    if (spec.d < 1) throw InvalidInput("spectrum_gen: d must be positive");
    Vector evals;
    if (spec.kind == "geometric") {
        if (!(spec.ratio > 0.0) || spec.ratio > 1.0)
            throw InvalidInput("spectrum_gen: geometric ratio must be in (0, 1]");
        evals = Vector(spec.d);
        for (int i = 0; i < spec.d; ++i) evals(i) = std::pow(spec.ratio, i);
    } else if (spec.kind == "flat") {
        evals = Vector::Ones(spec.d);
    } else if (spec.kind == "gapped") {
        if (spec.gap_at < 1 || spec.gap_at >= spec.d)
            throw InvalidInput("spectrum_gen: gap index out of range");
        if (!(spec.drop > 0.0) || spec.drop >= 1.0)
            throw InvalidInput("spectrum_gen: drop must be in (0, 1)");
        evals = Vector(spec.d);
        for (int i = 0; i < spec.d; ++i) {
            if (i < spec.gap_at)
                evals(i) = 1.0;
            else
                evals(i) = (1.0 - spec.drop) * std::pow(0.9, i - spec.gap_at + 1);
        }
    } else if (spec.kind == "custom") {
        if (spec.custom.size() != spec.d)
            throw InvalidInput("spectrum_gen: custom spectrum size mismatch");
        evals = spec.custom;
        std::sort(evals.data(), evals.data() + evals.size(), std::greater<double>());
    } else {
        throw InvalidInput("spectrum_gen: unknown kind " + spec.kind);
    }
    for (int i = 0; i < spec.d; ++i)
        if (!(evals(i) > 0.0)) throw InvalidInput("spectrum_gen: eigenvalues must be positive");
    Rng rng(mix_seed(seed, 0x5bec72u));
    return psd_with_spectrum(rng, evals);
}

bool RunReport::all_pass() const {
    for (const auto& row : rows)
        if (!row.pass) return false;
    return true;
}

std::string RunReport::to_csv() const {
    std::ostringstream out;
    out << "experiment,seed,d,k,param_json,measured,bound,pass,ms\n";
    for (const auto& row : rows) {
        out << row.experiment << ',' << row.seed << ',' << row.d << ',' << row.k << ','
            << csv_quote(row.param_json) << ',' << fmt_double(row.measured) << ','
            << fmt_double(row.bound) << ',' << (row.pass ? "true" : "false") << ",0\n";
    }
    return out.str();
}

std::string RunReport::to_json_summary() const {
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["experiment"] = experiment;
    j["rows"] = rows.size();
    std::size_t passes = 0, expected = 0;
    for (const auto& row : rows) {
        passes += row.pass ? 1 : 0;
        expected += row.expected_fail ? 1 : 0;
    }
    j["passes"] = passes;
    j["failures"] = rows.size() - passes;
    j["expected_fail_rows"] = expected;
    j["all_pass"] = all_pass();
    j["total_ms"] = total_ms;
    nlohmann::ordered_json per;
    for (const auto& row : rows) {
        per.push_back({{"seed", row.seed},
                       {"measured", row.measured},
                       {"bound", row.bound},
                       {"pass", row.pass},
                       {"ms", row.wall_ms}});
    }
    j["trials"] = per;
    return j.dump(2);
}

std::vector<std::string> experiment_names() {
    std::vector<std::string> names;
    for (const auto& def : registry()) names.push_back(def.name);
    return names;
}

bool is_experiment(const std::string& name) {
    for (const auto& def : registry())
        if (def.name == name) return true;
    return false;
}

std::string describe_experiment(const std::string& name) {
    return find_experiment(name).description;
}

RunReport run_experiment(const ExperimentParams& params) {
    const ExperimentDef& def = find_experiment(params.experiment);

    Resolved r = def.defaults;
    r.d = pick(params.dim, r.d);
    r.k = pick(params.k, r.k);
    r.eps = pick(params.eps, r.eps);
    r.delta = pick(params.delta, r.delta);
    r.gamma = pick(params.gamma, r.gamma);
    r.Gamma = pick(params.Gamma, r.Gamma);
    if (def.name == "invalid-regime") {
        // the mass budget may arrive through either flag spelling
        r.Delta = params.Delta >= 0.0 ? params.Delta
                                      : (params.delta >= 0.0 ? params.delta : r.Delta);
    } else {
        r.Delta = params.Delta >= 0.0 ? params.Delta : r.Delta;
    }
    if (params.n > 0) r.n = params.n;
    if (r.n == 0 && (def.name == "robust-subg" || def.name == "robust-ht")) {
        const double rate = r.eps * std::log(1.0 / r.eps);
        r.n = static_cast<std::int64_t>(std::ceil(20.0 * r.d / (rate * rate)));
    }
    if (r.k > r.d) throw InvalidInput("run_experiment: k exceeds dim");

    std::vector<std::uint64_t> seeds = params.seeds;
    if (seeds.empty())
        for (std::uint64_t s = 1; s <= 20; ++s) seeds.push_back(s);

    RunReport report;
    report.experiment = def.name;
    report.rows.resize(seeds.size());
    std::vector<std::exception_ptr> errors(seeds.size());

    const auto t0 = std::chrono::steady_clock::now();
    parallel_for(seeds.size(), static_cast<unsigned>(params.jobs), [&](std::size_t i) {
        const auto s0 = std::chrono::steady_clock::now();
        try {
            report.rows[i] = def.trial(r, seeds[i]);
        } catch (...) {
            errors[i] = std::current_exception();
        }
        report.rows[i].wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - s0)
                .count();
    });
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);
    report.total_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

std::vector<std::uint64_t> parse_seed_spec(const std::string& spec) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(spec);
    std::string piece;
    while (std::getline(ss, piece, ',')) {
        piece.erase(0, piece.find_first_not_of(" \t"));
        piece.erase(piece.find_last_not_of(" \t") + 1);
        if (piece.empty()) throw InvalidInput("seed spec: empty element");
        const auto dots = piece.find("..");
        try {
            if (dots == std::string::npos) {
                seeds.push_back(std::stoull(piece));
            } else {
                const std::uint64_t lo = std::stoull(piece.substr(0, dots));
                const std::uint64_t hi = std::stoull(piece.substr(dots + 2));
                if (hi < lo) throw InvalidInput("seed spec: descending range " + piece);
                for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
            }
        } catch (const std::invalid_argument&) {
            throw InvalidInput("seed spec: cannot parse " + piece);
        } catch (const std::out_of_range&) {
            throw InvalidInput("seed spec: out of range " + piece);
        }
    }
    if (seeds.empty()) throw InvalidInput("seed spec: no seeds");
    return seeds;
}

ExperimentParams parse_config_text(const std::string& text) {
    ExperimentParams p;
    bool schema_seen = false;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& why) {
        throw InvalidInput("config line " + std::to_string(lineno) + ": " + why);
    };
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line.erase(0, line.find_first_not_of(" \t\r"));
        line.erase(line.find_last_not_of(" \t\r") + 1);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail("expected key = value");
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        key.erase(key.find_last_not_of(" \t") + 1);
        val.erase(0, val.find_first_not_of(" \t"));
        if (key.empty() || val.empty()) fail("empty key or value");
        if (val.size() >= 2 && val.front() == '"' && val.back() == '"')
            val = val.substr(1, val.size() - 2);

        auto as_int = [&]() {
            try {
                std::size_t used = 0;
                const long long v = std::stoll(val, &used);
                if (used != val.size()) fail("bad integer " + val);
                return v;
            } catch (const InvalidInput&) {
                throw;
            } catch (...) {
                fail("bad integer " + val);
            }
            return 0LL;
        };
        auto as_double = [&]() {
            try {
                std::size_t used = 0;
                const double v = std::stod(val, &used);
                if (used != val.size()) fail("bad number " + val);
                return v;
            } catch (const InvalidInput&) {
                throw;
            } catch (...) {
                fail("bad number " + val);
            }
            return 0.0;
        };

        if (key == "schema") {
            if (as_int() != 1) fail("unsupported schema version " + val);
            schema_seen = true;
        } else if (key == "experiment") {
            p.experiment = val;
        } else if (key == "dim") {
            p.dim = static_cast<int>(as_int());
        } else if (key == "k") {
            p.k = static_cast<int>(as_int());
        } else if (key == "eps") {
            p.eps = as_double();
        } else if (key == "delta") {
            p.delta = as_double();
        } else if (key == "gamma") {
            p.gamma = as_double();
        } else if (key == "Delta") {
            p.Delta = as_double();
        } else if (key == "Gamma") {
            p.Gamma = as_double();
        } else if (key == "seeds") {
            p.seeds = parse_seed_spec(val);
        } else if (key == "out") {
            p.out = val;
        } else if (key == "jobs") {
            p.jobs = static_cast<int>(as_int());
        } else {
            fail("unknown key " + key);
        }
    }
    if (!schema_seen) throw InvalidInput("config: missing schema = 1");
    if (p.experiment.empty()) throw InvalidInput("config: missing experiment");
    return p;
}

ExperimentParams load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace harness
}  // namespace pcalab
