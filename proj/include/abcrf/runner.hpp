#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "abcrf/config.hpp"
#include "abcrf/forest_io.hpp"
#include "abcrf/inference.hpp"
#include "abcrf/particle_io.hpp"

namespace abcrf {

namespace detail {
inline constexpr std::uint64_t kTrain = 0xd1;
inline constexpr std::uint64_t kReplicate = 0x726570;
} // namespace detail

/// A runnable model assembled from a RunConfig: the simulate-and-summarize
/// closure, the resolved acceptance specs, and the resolved observations.
struct BuiltModel {
    ModelFn fn;
    std::vector<SummarySpec> summaries;
    std::shared_ptr<const Landscape> landscape; // spatial only
    std::vector<double> observed_sir;
    std::vector<double> observed_spread;
    double observed_intensity = 0.0;
};

inline std::size_t whole_years(double horizon) {
    const auto years = static_cast<std::size_t>(std::floor(horizon + 1e-9));
    if (years < 1) throw std::runtime_error("config: model.horizon: shorter than one year");
    return years;
}

inline BuiltModel build_model(const RunConfig& cfg) {
    BuiltModel built;

    if (cfg.is_sir()) {
        const auto& m = cfg.sir();
        SirInit init{m.n, m.i0};
        init.validate();
        if (!m.observed.empty()) {
            built.observed_sir = m.observed;
        } else {
            m.observed_from->validate();
            built.observed_sir =
                simulate_sir(*m.observed_from, init, m.obs_times, m.horizon, m.step).i;
        }

        std::size_t beta_at = 0, gamma_at = 0;
        for (std::size_t k = 0; k < cfg.priors.size(); ++k) {
            if (cfg.priors[k].name == "beta") beta_at = k;
            if (cfg.priors[k].name == "gamma") gamma_at = k;
        }
        const auto observed = built.observed_sir;
        const auto obs_times = m.obs_times;
        built.fn = [=](std::span<const double> params, std::uint64_t) {
            const auto traj = simulate_sir(SirParams{params[beta_at], params[gamma_at]}, init,
                                           obs_times, m.horizon, m.step);
            return std::vector<double>{ss_sir(observed, traj.i)};
        };
    } else {
        const auto& m = cfg.spatial();
        auto landscape = std::make_shared<const Landscape>(
            m.landscape_path
                ? load_landscape(*m.landscape_path, m.cell_size)
                : uniform_landscape(m.uniform->rows, m.uniform->cols, m.uniform->occupancy,
                                    m.uniform->cell_size));
        built.landscape = landscape;
        const std::size_t years = whole_years(m.horizon);

        if (m.observed_from) {
            const SpatialParams truth{m.observed_from->epsilon, m.observed_from->beta,
                                      m.observed_from->alpha, m.r, m.p0};
            const auto state =
                simulate_outbreak(truth, *landscape, m.origin, m.horizon, m.observed_from->seed);
            built.observed_spread.resize(years);
            for (std::size_t y = 1; y <= years; ++y)
                built.observed_spread[y - 1] =
                    max_spread(state, static_cast<double>(y), *landscape);
            built.observed_intensity = intensity(state, m.horizon, *landscape);
        } else {
            built.observed_spread = m.observed_spread;
            built.observed_intensity = m.observed_intensity.value_or(0.0);
        }

        bool needs_radial = false, needs_intensity = false;
        for (const auto& entry : cfg.summaries) {
            needs_radial = needs_radial || entry.name == "radial";
            needs_intensity = needs_intensity || entry.name == "intensity";
        }
        if (needs_radial && built.observed_spread.size() != years)
            throw std::runtime_error(
                "config: model.observed.yearly_spread: need one distance per whole year (" +
                std::to_string(years) + ")");
        if (needs_intensity && !m.observed_from && !m.observed_intensity)
            throw std::runtime_error(
                "config: model.observed.final_intensity: required by the intensity statistic");

        std::size_t eps_at = 0, beta_at = 0, alpha_at = 0;
        for (std::size_t k = 0; k < cfg.priors.size(); ++k) {
            if (cfg.priors[k].name == "epsilon") eps_at = k;
            if (cfg.priors[k].name == "beta") beta_at = k;
            if (cfg.priors[k].name == "alpha") alpha_at = k;
        }
        std::vector<std::string> stat_names;
        for (const auto& entry : cfg.summaries) stat_names.push_back(entry.name);
        const auto observed_spread = built.observed_spread;
        const auto origin = m.origin;
        const double horizon = m.horizon, r = m.r, p0 = m.p0;
        const int replicates = m.replicates;
        built.fn = [=](std::span<const double> params, std::uint64_t seed) {
            std::vector<double> values(stat_names.size(), 0.0);
            const SpatialParams sp{params[eps_at], params[beta_at], params[alpha_at], r, p0};
            for (int rep = 0; rep < replicates; ++rep) {
                const auto state =
                    simulate_outbreak(sp, *landscape, origin, horizon,
                                      derive_seed(seed, detail::kReplicate, rep));
                for (std::size_t k = 0; k < stat_names.size(); ++k) {
                    values[k] += stat_names[k] == "radial"
                                     ? ss_radial(observed_spread, state, *landscape)
                                     : intensity(state, horizon, *landscape);
                }
            }
            for (auto& v : values) v /= replicates;
            return values;
        };
    }

    for (const auto& entry : cfg.summaries) {
        SummarySpec spec;
        spec.name = entry.name;
        spec.kind = entry.kind;
        spec.threshold = entry.threshold;
        if (entry.kind == SummarySpec::Kind::interval) {
            if (entry.tolerance) {
                if (entry.name != "intensity")
                    throw std::runtime_error("config: summaries[]: tolerance intervals are only "
                                             "defined for the intensity statistic");
                spec.lower = built.observed_intensity - *entry.tolerance;
                spec.upper = built.observed_intensity + *entry.tolerance;
            } else {
                spec.lower = entry.lower;
                spec.upper = entry.upper;
            }
        }
        spec.validate();
        built.summaries.push_back(std::move(spec));
    }
    return built;
}

inline StageConfig make_stage_config(const RunConfig& cfg, const BuiltModel& built) {
    StageConfig stage;
    stage.model_id = cfg.is_sir() ? "sir" : "spatial";
    stage.n_stage1 = cfg.stage.n_stage1;
    stage.n_stage2 = cfg.stage.n_stage2;
    stage.prob_threshold = cfg.stage.prob_threshold;
    stage.summaries = built.summaries;
    stage.priors = cfg.priors;
    stage.forest = cfg.stage.forest;
    stage.seed = cfg.seed;
    stage.workers = cfg.workers;
    return stage;
}

namespace detail {

inline std::filesystem::path ensure_outdir(const RunConfig& cfg) {
    std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
    auto out = open_output(path.string());
    out << j.dump(2) << '\n';
}

} // namespace detail

/// simulate: one model run at explicit parameter values (natural scale,
/// keyed by prior name); writes trajectory.csv (sir) or outbreak.csv
/// (spatial) into the output directory.
inline std::filesystem::path phase_simulate(const RunConfig& cfg,
                                            const std::map<std::string, double>& params,
                                            std::uint64_t seed) {
    const auto outdir = detail::ensure_outdir(cfg);
    std::vector<double> values;
    for (const auto& prior : cfg.priors) {
        auto it = params.find(prior.name);
        if (it != params.end()) {
            values.push_back(it->second);
        } else if (cfg.is_sir() && cfg.sir().observed_from) {
            values.push_back(prior.name == "beta" ? cfg.sir().observed_from->beta
                                                  : cfg.sir().observed_from->gamma);
        } else if (!cfg.is_sir() && cfg.spatial().observed_from) {
            const auto& t = *cfg.spatial().observed_from;
            values.push_back(prior.name == "epsilon" ? t.epsilon
                             : prior.name == "beta"  ? t.beta
                                                     : t.alpha);
        } else {
            throw std::runtime_error("simulate: no value for parameter '" + prior.name +
                                     "' (pass --param " + prior.name + "=VALUE)");
        }
    }

    if (cfg.is_sir()) {
        const auto& m = cfg.sir();
        std::size_t beta_at = cfg.priors[0].name == "beta" ? 0 : 1;
        const auto traj = simulate_sir(SirParams{values[beta_at], values[1 - beta_at]},
                                       SirInit{m.n, m.i0}, m.obs_times, m.horizon, m.step);
        const auto path = outdir / "trajectory.csv";
        auto out = open_output(path.string());
        out << "t,S,I,R\n";
        for (std::size_t k = 0; k < traj.times.size(); ++k)
            out << format_double(traj.times[k]) << ',' << format_double(traj.s[k]) << ','
                << format_double(traj.i[k]) << ',' << format_double(traj.r[k]) << '\n';
        return path;
    }

    const auto& m = cfg.spatial();
    const auto built = build_model(cfg);
    std::map<std::string, std::size_t> at;
    for (std::size_t k = 0; k < cfg.priors.size(); ++k) at[cfg.priors[k].name] = k;
    const SpatialParams sp{values[at["epsilon"]], values[at["beta"]], values[at["alpha"]], m.r,
                           m.p0};
    const auto state = simulate_outbreak(sp, *built.landscape, m.origin, m.horizon, seed);
    const auto path = outdir / "outbreak.csv";
    auto out = open_output(path.string());
    out << "row,col,infection_time\n";
    for (const auto& e : state.events())
        out << e.cell.row << ',' << e.cell.col << ',' << format_double(e.time) << '\n';
    return path;
}

struct Stage1Result {
    std::filesystem::path csv;
    std::size_t n_particles = 0;
    std::size_t n_accepted = 0;
};

inline Stage1Result phase_stage1(const RunConfig& cfg) {
    const auto outdir = detail::ensure_outdir(cfg);
    const auto built = build_model(cfg);
    const auto stage = make_stage_config(cfg, built);

    Stage1Result result;
    result.csv = outdir / "stage1.csv";
    try {
        ParticleCsvWriter writer(result.csv.string(), stage.priors, stage.summaries,
                                 /*with_label=*/true, /*with_prob=*/false);
        const auto particles = run_stage1(
            stage, built.fn, [&](std::span<const Particle> chunk) { writer.append(chunk); });
        result.n_particles = particles.size();
        for (const auto& p : particles)
            if (p.accepted()) ++result.n_accepted;
    } catch (...) {
        // a labelled set that cannot train the next phase is not an artifact
        std::error_code ignore;
        std::filesystem::remove(result.csv, ignore);
        throw;
    }
    return result;
}

struct TrainResult {
    std::filesystem::path forest_file;
    std::filesystem::path oob_file;
    OobSummary oob;
};

inline TrainResult phase_train(const RunConfig& cfg,
                               std::optional<std::filesystem::path> stage1_csv = {}) {
    const auto outdir = detail::ensure_outdir(cfg);
    const auto built = build_model(cfg);
    const auto stage = make_stage_config(cfg, built);
    const auto input = stage1_csv.value_or(outdir / "stage1.csv");
    const auto file = read_particles_csv(input.string(), stage.priors, stage.summaries);
    if (!file.has_label)
        throw std::runtime_error(input.string() + ": no label column; run stage1 first");

    const auto data = training_set(file.particles, stage.priors);
    TrainResult result;
    Forest forest = train(data, stage.forest, derive_seed(cfg.seed, detail::kTrain), cfg.workers,
                          &result.oob);
    for (const auto& prior : stage.priors) {
        forest.feature_names.push_back(prior.name);
        forest.feature_scales.push_back(prior.scale == PriorSpec::Scale::log10 ? "log10"
                                                                               : "natural");
    }
    result.forest_file = outdir / "forest.json";
    result.oob_file = outdir / "oob.json";
    save_forest(forest, result.forest_file.string());
    detail::write_json({{"n_rows", result.oob.n_rows},
                        {"evaluated", result.oob.evaluated},
                        {"misclassified", result.oob.misclassified},
                        {"error_rate", result.oob.error_rate}},
                       result.oob_file);
    return result;
}

struct Stage2Result {
    std::filesystem::path posterior_csv;
    std::filesystem::path manifest;
    PosteriorSample posterior;
};

inline Stage2Result phase_stage2(const RunConfig& cfg,
                                 std::optional<std::filesystem::path> forest_file = {}) {
    const auto start = std::chrono::steady_clock::now();
    const auto outdir = detail::ensure_outdir(cfg);
    const auto built = build_model(cfg);
    const auto stage = make_stage_config(cfg, built);
    const auto forest = load_forest(forest_file.value_or(outdir / "forest.json").string());

    Stage2Result result;
    result.posterior = run_stage2(stage, forest, built.fn);
    result.posterior_csv = outdir / "posterior.csv";
    write_particles_csv(result.posterior_csv.string(), result.posterior.particles, stage.priors,
                        stage.summaries, /*with_label=*/false, /*with_prob=*/true);

    nlohmann::json marginals = nlohmann::json::array();
    for (const auto& m : result.posterior.marginals)
        marginals.push_back({{"name", m.name},
                             {"mean", m.mean},
                             {"median", m.median},
                             {"q025", m.q025},
                             {"q975", m.q975},
                             {"min", m.min},
                             {"max", m.max}});
    const auto& eff = result.posterior.efficiency;
    result.manifest = outdir / "manifest.json";
    detail::write_json(
        {{"phase", "stage2"},
         {"config", config_to_json(cfg)},
         {"seed", cfg.seed},
         {"counts",
          {{"n_stage1", stage.n_stage1},
           {"n_stage2", stage.n_stage2},
           {"gate_survivors", result.posterior.n_survivors},
           {"posterior", result.posterior.particles.size()}}},
         {"efficiency",
          {{"posterior_count", eff.posterior_count},
           {"stage1_sims", eff.stage1_sims},
           {"stage2_sims", eff.stage2_sims},
           {"ratio", eff.ratio}}},
         {"marginals", marginals},
         {"wall_time_seconds", detail::seconds_since(start)}},
        result.manifest);
    return result;
}

struct BaselinePhaseResult {
    std::filesystem::path csv;
    std::filesystem::path manifest;
    BaselineResult baseline;
};

inline BaselinePhaseResult phase_baseline(const RunConfig& cfg, std::size_t target_accepted,
                                          std::size_t budget) {
    const auto start = std::chrono::steady_clock::now();
    const auto outdir = detail::ensure_outdir(cfg);
    const auto built = build_model(cfg);
    const auto stage = make_stage_config(cfg, built);

    BaselinePhaseResult result;
    result.baseline = run_rejection_baseline(stage, built.fn, target_accepted, budget);
    result.csv = outdir / "baseline.csv";
    write_particles_csv(result.csv.string(), result.baseline.particles, stage.priors,
                        stage.summaries, /*with_label=*/false, /*with_prob=*/false);
    result.manifest = outdir / "baseline_manifest.json";
    detail::write_json({{"phase", "baseline"},
                        {"config", config_to_json(cfg)},
                        {"seed", cfg.seed},
                        {"target_accepted", target_accepted},
                        {"budget", budget},
                        {"simulations_used", result.baseline.simulations_used},
                        {"acceptance_rate", result.baseline.acceptance_rate},
                        {"wall_time_seconds", detail::seconds_since(start)}},
                       result.manifest);
    return result;
}

struct ReportResult {
    std::filesystem::path marginals_csv;
    std::vector<std::filesystem::path> histograms;
};

/// report: marginal-summary table plus one 30-bin histogram CSV per
/// parameter (bins on the sampling scale over the prior range).
inline ReportResult phase_report(const RunConfig& cfg,
                                 std::optional<std::filesystem::path> posterior_csv = {}) {
    const auto outdir = detail::ensure_outdir(cfg);
    const auto built = build_model(cfg);
    const auto stage = make_stage_config(cfg, built);
    const auto input = posterior_csv.value_or(outdir / "posterior.csv");
    const auto file = read_particles_csv(input.string(), stage.priors, stage.summaries);
    if (file.particles.empty())
        throw std::runtime_error(input.string() + ": empty posterior; nothing to report");

    const auto marginals = posterior_marginals(file.particles, stage.priors);
    ReportResult result;
    result.marginals_csv = outdir / "marginals.csv";
    auto out = open_output(result.marginals_csv.string());
    out << "param,scale,mean,median,q025,q975,min,max\n";
    for (std::size_t k = 0; k < marginals.size(); ++k) {
        const auto& m = marginals[k];
        out << m.name << ','
            << (stage.priors[k].scale == PriorSpec::Scale::log10 ? "log10" : "natural") << ','
            << format_double(m.mean) << ',' << format_double(m.median) << ','
            << format_double(m.q025) << ',' << format_double(m.q975) << ','
            << format_double(m.min) << ',' << format_double(m.max) << '\n';
    }

    constexpr int n_bins = 30;
    for (std::size_t k = 0; k < stage.priors.size(); ++k) {
        const auto& prior = stage.priors[k];
        std::vector<std::size_t> counts(n_bins, 0);
        const double width = (prior.upper - prior.lower) / n_bins;
        for (const auto& particle : file.particles) {
            const double v = particle.params_scaled[k];
            int bin = static_cast<int>((v - prior.lower) / width);
            bin = std::clamp(bin, 0, n_bins - 1);
            ++counts[bin];
        }
        const auto path = outdir / ("hist_" + prior.name + ".csv");
        auto hist = open_output(path.string());
        hist << "bin_lower,bin_upper,count\n";
        for (int b = 0; b < n_bins; ++b)
            hist << format_double(prior.lower + b * width) << ','
                 << format_double(b + 1 == n_bins ? prior.upper : prior.lower + (b + 1) * width)
                 << ',' << counts[b] << '\n';
        result.histograms.push_back(path);
    }
    return result;
}

} // namespace abcrf
