#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "abcrf/csv.hpp"
#include "abcrf/forest_io.hpp"
#include "abcrf/landscape.hpp"
#include "abcrf/prior.hpp"
#include "abcrf/sir.hpp"
#include "abcrf/spatial.hpp"
#include "abcrf/stats.hpp"

namespace abcrf {

struct SirModelConfig {
    double n = 1000.0;
    double i0 = 1.0;
    double horizon = 20.0;
    double step = 0.01;
    std::vector<double> obs_times;
    std::vector<double> observed;          // infected counts at obs_times, or:
    std::optional<SirParams> observed_from; // synthesize them at these parameters
};

struct UniformLandscapeSpec {
    int rows = 0, cols = 0;
    double occupancy = 0.0;
    double cell_size = 1.0;
};

struct SpatialTruth {
    double epsilon = 0.0, beta = 0.0, alpha = 0.0;
    std::uint64_t seed = 0;
};

struct SpatialModelConfig {
    std::optional<std::string> landscape_path;
    std::optional<UniformLandscapeSpec> uniform;
    double cell_size = 1.0; // for landscape_path files
    CellId origin;
    double horizon = 0.0;
    double r = 0.0;
    double p0 = 0.0;
    int replicates = 1;
    std::vector<double> observed_spread;     // km at years 1..floor(horizon), or:
    std::optional<double> observed_intensity;
    std::optional<SpatialTruth> observed_from; // synthesize both at these parameters
};

/// Summary entry as configured. An interval statistic may give an explicit
/// [lower, upper] or a tolerance around the observed value, resolved when
/// the model is built.
struct SummaryEntry {
    std::string name;
    SummarySpec::Kind kind = SummarySpec::Kind::threshold;
    double threshold = 0.0;
    double lower = 0.0, upper = 0.0;
    std::optional<double> tolerance;
};

struct StageSection {
    std::size_t n_stage1 = 0;
    std::size_t n_stage2 = 0;
    double prob_threshold = 0.75;
    ForestParams forest;
};

struct RunConfig {
    std::variant<SirModelConfig, SpatialModelConfig> model;
    std::vector<PriorSpec> priors;
    std::vector<SummaryEntry> summaries;
    StageSection stage;
    std::uint64_t seed = 0;
    unsigned workers = 0;
    std::string output_dir = "out";

    bool is_sir() const { return std::holds_alternative<SirModelConfig>(model); }
    const SirModelConfig& sir() const { return std::get<SirModelConfig>(model); }
    const SpatialModelConfig& spatial() const { return std::get<SpatialModelConfig>(model); }
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& path, const std::string& what) {
    throw std::runtime_error("config: " + path + ": " + what);
}

inline const nlohmann::json& need(const nlohmann::json& j, const char* key,
                                  const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) config_error(path + "." + key, "missing field");
    return *it;
}

template <typename T>
T get_as(const nlohmann::json& j, const char* key, const std::string& path) {
    try {
        return need(j, key, path).get<T>();
    } catch (const nlohmann::json::exception&) {
        config_error(path + "." + key, "wrong type");
    }
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, const std::string& path, T fallback) {
    if (!j.contains(key)) return fallback;
    return get_as<T>(j, key, path);
}

} // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j) {
    using detail::config_error;
    using detail::get_as;
    using detail::get_or;
    using detail::need;

    RunConfig cfg;
    const auto& jm = need(j, "model", "");
    const auto type = get_as<std::string>(jm, "type", "model");
    if (type == "sir") {
        SirModelConfig m;
        m.n = get_as<double>(jm, "n", "model");
        m.i0 = get_as<double>(jm, "i0", "model");
        m.horizon = get_as<double>(jm, "horizon", "model");
        m.step = get_or<double>(jm, "step", "model", 0.01);
        m.obs_times = get_as<std::vector<double>>(jm, "obs_times", "model");
        if (jm.contains("observed"))
            m.observed = get_as<std::vector<double>>(jm, "observed", "model");
        if (jm.contains("observed_from")) {
            const auto& jt = jm["observed_from"];
            m.observed_from = SirParams{get_as<double>(jt, "beta", "model.observed_from"),
                                        get_as<double>(jt, "gamma", "model.observed_from")};
        }
        if (m.observed.empty() && !m.observed_from)
            config_error("model", "need either 'observed' or 'observed_from'");
        if (!m.observed.empty() && m.observed.size() != m.obs_times.size())
            config_error("model.observed", "length differs from obs_times");
        if (m.obs_times.empty()) config_error("model.obs_times", "must not be empty");
        cfg.model = std::move(m);
    } else if (type == "spatial") {
        SpatialModelConfig m;
        const auto& jl = need(jm, "landscape", "model");
        if (jl.contains("path")) {
            m.landscape_path = get_as<std::string>(jl, "path", "model.landscape");
            m.cell_size = get_or<double>(jl, "cell_size", "model.landscape", 1.0);
        } else {
            UniformLandscapeSpec u;
            u.rows = get_as<int>(jl, "rows", "model.landscape");
            u.cols = get_as<int>(jl, "cols", "model.landscape");
            u.occupancy = get_as<double>(jl, "occupancy", "model.landscape");
            u.cell_size = get_or<double>(jl, "cell_size", "model.landscape", 1.0);
            m.uniform = u;
            m.cell_size = u.cell_size;
        }
        const auto& jo = need(jm, "origin", "model");
        m.origin = {get_as<int>(jo, "row", "model.origin"), get_as<int>(jo, "col", "model.origin")};
        m.horizon = get_as<double>(jm, "horizon", "model");
        m.r = get_as<double>(jm, "r", "model");
        m.p0 = get_as<double>(jm, "p0", "model");
        m.replicates = get_or<int>(jm, "replicates", "model", 1);
        if (m.replicates < 1) config_error("model.replicates", "must be >= 1");
        if (jm.contains("observed")) {
            const auto& jd = jm["observed"];
            if (jd.contains("yearly_spread"))
                m.observed_spread =
                    get_as<std::vector<double>>(jd, "yearly_spread", "model.observed");
            if (jd.contains("final_intensity"))
                m.observed_intensity = get_as<double>(jd, "final_intensity", "model.observed");
        }
        if (jm.contains("observed_from")) {
            const auto& jt = jm["observed_from"];
            m.observed_from =
                SpatialTruth{get_as<double>(jt, "epsilon", "model.observed_from"),
                             get_as<double>(jt, "beta", "model.observed_from"),
                             get_as<double>(jt, "alpha", "model.observed_from"),
                             get_as<std::uint64_t>(jt, "seed", "model.observed_from")};
        }
        cfg.model = std::move(m);
    } else {
        config_error("model.type", "unknown model '" + type + "' (expected sir or spatial)");
    }

    for (const auto& jp : need(j, "priors", "")) {
        PriorSpec prior;
        prior.name = get_as<std::string>(jp, "name", "priors[]");
        const auto scale = get_or<std::string>(jp, "scale", "priors[]", "natural");
        if (scale == "natural")
            prior.scale = PriorSpec::Scale::natural;
        else if (scale == "log10")
            prior.scale = PriorSpec::Scale::log10;
        else
            config_error("priors[].scale", "unknown scale '" + scale + "'");
        prior.lower = get_as<double>(jp, "lower", "priors[]");
        prior.upper = get_as<double>(jp, "upper", "priors[]");
        prior.validate();
        cfg.priors.push_back(std::move(prior));
    }

    for (const auto& js : need(j, "summaries", "")) {
        SummaryEntry entry;
        entry.name = get_as<std::string>(js, "name", "summaries[]");
        const auto kind = get_as<std::string>(js, "kind", "summaries[]");
        if (kind == "threshold") {
            entry.kind = SummarySpec::Kind::threshold;
            entry.threshold = get_as<double>(js, "threshold", "summaries[]");
        } else if (kind == "interval") {
            entry.kind = SummarySpec::Kind::interval;
            if (js.contains("tolerance")) {
                entry.tolerance = get_as<double>(js, "tolerance", "summaries[]");
                if (!(*entry.tolerance > 0.0))
                    config_error("summaries[].tolerance", "must be > 0");
            } else if (js.contains("lower") || js.contains("upper")) {
                entry.lower = get_as<double>(js, "lower", "summaries[]");
                entry.upper = get_as<double>(js, "upper", "summaries[]");
            } else {
                entry.tolerance = 0.05; // default band around the observed value
            }
        } else {
            config_error("summaries[].kind", "unknown kind '" + kind + "'");
        }
        cfg.summaries.push_back(std::move(entry));
    }

    const auto& jst = need(j, "stage", "");
    cfg.stage.n_stage1 = get_as<std::size_t>(jst, "n_stage1", "stage");
    cfg.stage.n_stage2 = get_as<std::size_t>(jst, "n_stage2", "stage");
    cfg.stage.prob_threshold = get_as<double>(jst, "prob_threshold", "stage");
    if (!(cfg.stage.prob_threshold > 0.0 && cfg.stage.prob_threshold < 1.0))
        config_error("stage.prob_threshold", "must be in (0,1)");
    if (jst.contains("forest")) {
        const auto& jf = jst["forest"];
        cfg.stage.forest.n_trees = get_or<int>(jf, "n_trees", "stage.forest", 500);
        cfg.stage.forest.mtry = get_or<int>(jf, "mtry", "stage.forest", 0);
        cfg.stage.forest.min_node_size = get_or<int>(jf, "min_node_size", "stage.forest", 1);
        cfg.stage.forest.max_depth = get_or<int>(jf, "max_depth", "stage.forest", 0);
        cfg.stage.forest.bootstrap = bootstrap_from_name(
            get_or<std::string>(jf, "bootstrap", "stage.forest", "stratified"));
    }
    cfg.stage.forest.validate();

    cfg.seed = get_as<std::uint64_t>(j, "seed", "");
    cfg.workers = get_or<unsigned>(j, "workers", "", 0);
    cfg.output_dir = get_or<std::string>(j, "output_dir", "", "out");

    // model/summary coupling
    const bool sir = cfg.is_sir();
    for (const auto& entry : cfg.summaries) {
        const bool known = sir ? entry.name == "ss"
                               : (entry.name == "radial" || entry.name == "intensity");
        if (!known)
            config_error("summaries[]", "statistic '" + entry.name + "' not provided by the " +
                                            std::string(sir ? "sir" : "spatial") + " model");
    }
    if (cfg.summaries.empty()) config_error("summaries", "must not be empty");
    for (std::size_t a = 0; a < cfg.summaries.size(); ++a)
        for (std::size_t b = a + 1; b < cfg.summaries.size(); ++b)
            if (cfg.summaries[a].name == cfg.summaries[b].name)
                config_error("summaries", "duplicate statistic '" + cfg.summaries[a].name + "'");
    const std::vector<std::string> expected_params =
        sir ? std::vector<std::string>{"beta", "gamma"}
            : std::vector<std::string>{"epsilon", "beta", "alpha"};
    if (cfg.priors.size() != expected_params.size())
        config_error("priors", "expected " + std::to_string(expected_params.size()) +
                                   " parameters for this model");
    for (const auto& name : expected_params) {
        bool found = false;
        for (const auto& prior : cfg.priors) found = found || prior.name == name;
        if (!found) config_error("priors", "missing prior for parameter '" + name + "'");
    }
    return cfg;
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    nlohmann::json jm;
    if (cfg.is_sir()) {
        const auto& m = cfg.sir();
        jm["type"] = "sir";
        jm["n"] = m.n;
        jm["i0"] = m.i0;
        jm["horizon"] = m.horizon;
        jm["step"] = m.step;
        jm["obs_times"] = m.obs_times;
        if (!m.observed.empty()) jm["observed"] = m.observed;
        if (m.observed_from)
            jm["observed_from"] = {{"beta", m.observed_from->beta},
                                   {"gamma", m.observed_from->gamma}};
    } else {
        const auto& m = cfg.spatial();
        jm["type"] = "spatial";
        if (m.landscape_path)
            jm["landscape"] = {{"path", *m.landscape_path}, {"cell_size", m.cell_size}};
        else
            jm["landscape"] = {{"rows", m.uniform->rows},
                               {"cols", m.uniform->cols},
                               {"occupancy", m.uniform->occupancy},
                               {"cell_size", m.uniform->cell_size}};
        jm["origin"] = {{"row", m.origin.row}, {"col", m.origin.col}};
        jm["horizon"] = m.horizon;
        jm["r"] = m.r;
        jm["p0"] = m.p0;
        jm["replicates"] = m.replicates;
        nlohmann::json jd;
        if (!m.observed_spread.empty()) jd["yearly_spread"] = m.observed_spread;
        if (m.observed_intensity) jd["final_intensity"] = *m.observed_intensity;
        if (!jd.is_null()) jm["observed"] = jd;
        if (m.observed_from)
            jm["observed_from"] = {{"epsilon", m.observed_from->epsilon},
                                   {"beta", m.observed_from->beta},
                                   {"alpha", m.observed_from->alpha},
                                   {"seed", m.observed_from->seed}};
    }
    j["model"] = std::move(jm);

    auto& jp = j["priors"] = nlohmann::json::array();
    for (const auto& prior : cfg.priors)
        jp.push_back({{"name", prior.name},
                      {"scale", prior.scale == PriorSpec::Scale::log10 ? "log10" : "natural"},
                      {"lower", prior.lower},
                      {"upper", prior.upper}});

    auto& js = j["summaries"] = nlohmann::json::array();
    for (const auto& entry : cfg.summaries) {
        nlohmann::json e{{"name", entry.name}};
        if (entry.kind == SummarySpec::Kind::threshold) {
            e["kind"] = "threshold";
            e["threshold"] = entry.threshold;
        } else {
            e["kind"] = "interval";
            if (entry.tolerance)
                e["tolerance"] = *entry.tolerance;
            else {
                e["lower"] = entry.lower;
                e["upper"] = entry.upper;
            }
        }
        js.push_back(std::move(e));
    }

    j["stage"] = {{"n_stage1", cfg.stage.n_stage1},
                  {"n_stage2", cfg.stage.n_stage2},
                  {"prob_threshold", cfg.stage.prob_threshold},
                  {"forest",
                   {{"n_trees", cfg.stage.forest.n_trees},
                    {"mtry", cfg.stage.forest.mtry},
                    {"min_node_size", cfg.stage.forest.min_node_size},
                    {"max_depth", cfg.stage.forest.max_depth},
                    {"bootstrap", bootstrap_name(cfg.stage.forest.bootstrap)}}}};
    j["seed"] = cfg.seed;
    j["workers"] = cfg.workers;
    j["output_dir"] = cfg.output_dir;
    return j;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": invalid JSON: " + e.what());
    }
    auto cfg = config_from_json(j);
    if (!cfg.is_sir() && cfg.spatial().landscape_path &&
        !std::filesystem::exists(*cfg.spatial().landscape_path))
        detail::config_error("model.landscape.path",
                             "file not found: " + *cfg.spatial().landscape_path);
    return cfg;
}

} // namespace abcrf
