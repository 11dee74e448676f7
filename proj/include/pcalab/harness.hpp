#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pcalab/types.hpp"

namespace pcalab {
namespace harness {

// ---------------------------------------------------------------------------
// Spectrum generator: a named diagonal profile rotated by a seeded random
// orthogonal matrix, so experiments never see axis-aligned structure.
// ---------------------------------------------------------------------------
struct SpectrumSpec {
    std::string kind = "geometric";  // gapped | flat | geometric | custom
    int d = 8;
    double ratio = 0.9;      // geometric decay, also used below a gap
    int gap_at = 1;          // gapped: index (1-based) after which the drop happens
    double drop = 0.3;       // gapped: lambda_{g+1} <= (1 - drop) * lambda_g
    Vector custom = Vector();
};

SymMatrix spectrum_gen(const SpectrumSpec& spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Experiment plumbing. A run resolves CLI/config values against per-experiment
// defaults, executes one trial per seed in a worker pool, and merges rows in
// seed order. CSV bytes are deterministic for a fixed config + seeds: the ms
// column is always 0 there; wall-clock timing goes to the JSON summary.
// ---------------------------------------------------------------------------
struct ExperimentParams {
    std::string experiment;
    int dim = 0;        // 0 = experiment default
    int k = 0;          // 0 = experiment default
    double eps = -1.0;  // negative = experiment default
    double delta = -1.0;
    double gamma = -1.0;
    double Delta = -1.0;
    double Gamma = -1.0;
    std::vector<std::uint64_t> seeds;  // empty = experiment default (1..20)
    std::string out;                   // output stem; empty = stdout only
    int jobs = 1;                      // 0 = hardware concurrency
    std::int64_t n = 0;                // sample-count override (library-only knob)
};

struct ResultRow {
    std::string experiment;
    std::uint64_t seed = 0;
    int d = 0;
    int k = 0;
    std::string param_json;  // compact JSON: resolved params, tolerance, optional marker
    double measured = 0.0;
    double bound = 0.0;
    bool pass = false;
    bool expected_fail = false;  // counterexample rows: measured > bound by design
    double wall_ms = 0.0;        // reported in the JSON summary, not the CSV
};

struct RunReport {
    std::string experiment;
    std::vector<ResultRow> rows;
    double total_ms = 0.0;

    bool all_pass() const;  // expected-fail rows count as pass
    std::string to_csv() const;
    std::string to_json_summary() const;
};

std::vector<std::string> experiment_names();
bool is_experiment(const std::string& name);
std::string describe_experiment(const std::string& name);  // InvalidInput if unknown

RunReport run_experiment(const ExperimentParams& params);

// "7", "1..20", or comma-separated combinations of both.
std::vector<std::uint64_t> parse_seed_spec(const std::string& spec);

// Minimal TOML-style config: `key = value` lines, # comments, schema = 1
// required. Unknown keys or bad syntax throw InvalidInput.
ExperimentParams parse_config_text(const std::string& text);
ExperimentParams load_config_file(const std::string& path);

}  // namespace harness
}  // namespace pcalab
