#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "pcalab/harness.hpp"

namespace {

int do_run(const pcalab::harness::ExperimentParams& params) {
    pcalab::harness::RunReport report = pcalab::harness::run_experiment(params);
    if (params.out.empty()) {
        std::cout << report.to_csv();
    } else {
        const std::string csv_path = params.out + ".csv";
        const std::string json_path = params.out + ".summary.json";
        std::ofstream csv(csv_path);
        if (!csv) {
            std::cerr << "pca-lab: cannot write " << csv_path << "\n";
            return 2;
        }
        csv << report.to_csv();
        std::ofstream js(json_path);
        if (!js) {
            std::cerr << "pca-lab: cannot write " << json_path << "\n";
            return 2;
        }
        js << report.to_json_summary() << "\n";
        std::size_t passes = 0;
        for (const auto& row : report.rows) passes += row.pass ? 1 : 0;
        std::cout << report.experiment << ": " << passes << "/" << report.rows.size()
                  << " rows pass; wrote " << csv_path << " and " << json_path << "\n";
    }
    return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pca-lab: seeded spectral-approximation experiments with CSV/JSON reports"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run one experiment across seeds");
    std::string experiment, seeds_spec, out, config_path;
    int dim = 0, k = 0, jobs = 1;
    double eps = -1.0, delta = -1.0, gamma = -1.0, Delta = -1.0, Gamma = -1.0;
    run->add_option("--experiment", experiment, "experiment id (see `pca-lab list`)");
    run->add_option("--dim", dim, "ambient dimension");
    run->add_option("--k", k, "number of extracted directions");
    run->add_option("--eps", eps, "per-call energy deficit / contamination rate");
    run->add_option("--delta", delta, "per-call leakage budget");
    run->add_option("--gamma", gamma, "per-call spectral slack");
    run->add_option("--Delta", Delta, "combined leakage budget");
    run->add_option("--Gamma", Gamma, "combined spectral slack");
    run->add_option("--seeds", seeds_spec, "seed spec: 7 | 1..20 | 1..4,9");
    run->add_option("--out", out, "output stem for <out>.csv and <out>.summary.json");
    run->add_option("--jobs", jobs, "worker threads (0 = hardware)");
    run->add_option("--config", config_path, "TOML-style config file (schema = 1)");

    auto* list = app.add_subcommand("list", "list experiment ids");

    auto* describe = app.add_subcommand("describe", "explain one experiment");
    std::string describe_name;
    describe->add_option("name", describe_name, "experiment id")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (list->parsed()) {
            for (const auto& name : pcalab::harness::experiment_names()) std::cout << name << "\n";
            return 0;
        }
        if (describe->parsed()) {
            if (!pcalab::harness::is_experiment(describe_name)) {
                std::cerr << "pca-lab: unknown experiment " << describe_name << "\n";
                return 2;
            }
            std::cout << describe_name << ": "
                      << pcalab::harness::describe_experiment(describe_name) << "\n";
            return 0;
        }

        pcalab::harness::ExperimentParams params;
        if (!config_path.empty()) params = pcalab::harness::load_config_file(config_path);
        if (run->count("--experiment")) params.experiment = experiment;
        if (run->count("--dim")) params.dim = dim;
        if (run->count("--k")) params.k = k;
        if (run->count("--eps")) params.eps = eps;
        if (run->count("--delta")) params.delta = delta;
        if (run->count("--gamma")) params.gamma = gamma;
        if (run->count("--Delta")) params.Delta = Delta;
        if (run->count("--Gamma")) params.Gamma = Gamma;
        if (run->count("--seeds")) params.seeds = pcalab::harness::parse_seed_spec(seeds_spec);
        if (run->count("--out")) params.out = out;
        if (run->count("--jobs")) params.jobs = jobs;

        if (params.experiment.empty()) {
            std::cerr << "pca-lab: --experiment (or a config file) is required\n";
            return 2;
        }
        if (!pcalab::harness::is_experiment(params.experiment)) {
            std::cerr << "pca-lab: unknown experiment " << params.experiment << "\n";
            return 2;
        }
        if (params.seeds.empty()) {
            if (const char* env = std::getenv("PCA_LAB_SEED"))
                params.seeds = pcalab::harness::parse_seed_spec(env);
        }
        return do_run(params);
    } catch (const pcalab::Error& e) {
        std::cerr << "pca-lab: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "pca-lab: " << e.what() << "\n";
        return 2;
    }
}
