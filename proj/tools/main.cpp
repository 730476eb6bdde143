#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "abcrf/runner.hpp"

namespace {

std::map<std::string, double> parse_param_args(const std::vector<std::string>& args) {
    std::map<std::string, double> params;
    for (const auto& arg : args) {
        const auto eq = arg.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::runtime_error("--param expects name=value, got '" + arg + "'");
        params[arg.substr(0, eq)] =
            abcrf::parse_double(arg.substr(eq + 1), "--param " + arg.substr(0, eq));
    }
    return params;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage likelihood-free inference: ABC rejection with "
                 "random-forest screening of candidate particles"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "run configuration (JSON)")->required();
    std::optional<std::uint64_t> seed;
    app.add_option("--seed", seed, "override the master seed");
    std::optional<unsigned> workers;
    app.add_option("--workers", workers, "override the worker count (0 = all cores)");
    std::optional<std::string> outdir;
    app.add_option("--out", outdir, "override the output directory");

    auto* cmd_simulate =
        app.add_subcommand("simulate", "run the model once and write trajectory/outbreak CSV");
    std::vector<std::string> param_args;
    cmd_simulate->add_option("--param", param_args,
                             "parameter value as name=value (repeatable); defaults to the "
                             "config's observed_from values");

    app.add_subcommand("stage1", "sample the prior, simulate and label every particle");

    auto* cmd_train =
        app.add_subcommand("train", "train the acceptance classifier on stage-1 output");
    std::string train_in;
    cmd_train->add_option("--in", train_in, "labelled particle CSV (default <out>/stage1.csv)");

    auto* cmd_stage2 =
        app.add_subcommand("stage2", "screen candidates through the classifier, simulate "
                                     "survivors, write the posterior");
    std::string forest_in;
    cmd_stage2->add_option("--forest", forest_in, "forest file (default <out>/forest.json)");

    auto* cmd_baseline = app.add_subcommand("baseline", "plain ABC rejection for comparison");
    std::size_t target = 1000, budget = 10000000;
    cmd_baseline->add_option("--target", target, "accepted particles to collect");
    cmd_baseline->add_option("--budget", budget, "maximum simulations before giving up");

    auto* cmd_report =
        app.add_subcommand("report", "marginal summaries and histogram tables for a posterior");
    std::string report_in;
    cmd_report->add_option("--in", report_in, "posterior CSV (default <out>/posterior.csv)");

    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = abcrf::load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (workers) cfg.workers = *workers;
        if (outdir) cfg.output_dir = *outdir;

        if (cmd_simulate->parsed()) {
            const auto path =
                abcrf::phase_simulate(cfg, parse_param_args(param_args), cfg.seed);
            std::cout << "simulate: wrote " << path.string() << '\n';
        } else if (app.get_subcommand("stage1")->parsed()) {
            const auto result = abcrf::phase_stage1(cfg);
            std::cout << "stage1: " << result.n_accepted << " of " << result.n_particles
                      << " particles accepted -> " << result.csv.string() << '\n';
        } else if (cmd_train->parsed()) {
            const auto result = abcrf::phase_train(
                cfg, train_in.empty() ? std::nullopt
                                      : std::optional<std::filesystem::path>(train_in));
            std::cout << "train: out-of-bag error " << result.oob.error_rate << " ("
                      << result.oob.misclassified << "/" << result.oob.evaluated
                      << " evaluated rows) -> " << result.forest_file.string() << '\n';
        } else if (cmd_stage2->parsed()) {
            const auto result = abcrf::phase_stage2(
                cfg, forest_in.empty() ? std::nullopt
                                       : std::optional<std::filesystem::path>(forest_in));
            const auto& eff = result.posterior.efficiency;
            std::cout << "stage2: " << result.posterior.n_survivors << " of "
                      << result.posterior.n_candidates << " candidates passed the gate, "
                      << result.posterior.particles.size() << " accepted; efficiency "
                      << eff.posterior_count << "/" << (eff.stage1_sims + eff.stage2_sims)
                      << " = " << eff.ratio << " -> " << result.posterior_csv.string() << '\n';
        } else if (cmd_baseline->parsed()) {
            const auto result = abcrf::phase_baseline(cfg, target, budget);
            std::cout << "baseline: " << result.baseline.particles.size() << " accepted in "
                      << result.baseline.simulations_used << " simulations (rate "
                      << result.baseline.acceptance_rate << ") -> " << result.csv.string()
                      << '\n';
        } else if (cmd_report->parsed()) {
            const auto result = abcrf::phase_report(
                cfg, report_in.empty() ? std::nullopt
                                       : std::optional<std::filesystem::path>(report_in));
            std::cout << "report: wrote " << result.marginals_csv.string() << " and "
                      << result.histograms.size() << " histogram tables\n";
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
