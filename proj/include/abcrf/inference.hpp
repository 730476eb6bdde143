#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "abcrf/forest.hpp"
#include "abcrf/parallel.hpp"
#include "abcrf/prior.hpp"
#include "abcrf/stats.hpp"

namespace abcrf {

/// Simulates one particle and returns the raw statistic values, one per
/// SummarySpec, in spec order. Must be pure in (params, seed).
using ModelFn = std::function<std::vector<double>(std::span<const double>, std::uint64_t)>;

struct StageConfig {
    std::string model_id; // "sir" | "spatial"
    std::size_t n_stage1 = 0;
    std::size_t n_stage2 = 0;
    double prob_threshold = 0.75;
    std::vector<SummarySpec> summaries;
    std::vector<PriorSpec> priors;
    ForestParams forest;
    std::uint64_t seed = 0;
    unsigned workers = 0;

    void validate() const {
        if (n_stage1 < 1 || n_stage2 < 1)
            throw std::invalid_argument("StageConfig: stage sizes must be >= 1");
        if (!(prob_threshold > 0.0 && prob_threshold <= 1.0))
            throw std::invalid_argument("StageConfig: probability threshold must be in (0,1]");
        if (summaries.empty()) throw std::invalid_argument("StageConfig: no summary statistics");
        for (const auto& s : summaries) s.validate();
        if (priors.empty()) throw std::invalid_argument("StageConfig: no priors");
        for (const auto& p : priors) p.validate();
        forest.validate();
    }
};

namespace detail {

// Stream tags keeping stage-1, stage-2 and baseline seed streams disjoint.
inline constexpr std::uint64_t kDrawStage1 = 0xa1;
inline constexpr std::uint64_t kSimStage1 = 0xa2;
inline constexpr std::uint64_t kDrawStage2 = 0xb1;
inline constexpr std::uint64_t kSimStage2 = 0xb2;
inline constexpr std::uint64_t kDrawBaseline = 0xc1;
inline constexpr std::uint64_t kSimBaseline = 0xc2;

inline void simulate_and_label(Particle& particle, const ModelFn& model,
                               std::span<const SummarySpec> specs) {
    const auto values = model(particle.params, particle.seed);
    particle.summaries = evaluate_summaries(values, specs);
    const bool all = std::all_of(particle.summaries.begin(), particle.summaries.end(),
                                 [](const SummaryValue& s) { return s.accepted; });
    particle.label = all ? Label::accepted : Label::rejected;
}

} // namespace detail

/// Called after each completed block of stage-1 particles, in index order;
/// lets callers persist results incrementally during long runs.
using ChunkSink = std::function<void(std::span<const Particle>)>;

/// Stage 1: sample the prior, simulate every particle, label it accepted
/// when every summary statistic satisfies its spec. Particle i simulates
/// with seed derived from (master seed, stage, i); results are identical
/// for any worker count and any chunking.
inline std::vector<Particle> run_stage1(const StageConfig& config, const ModelFn& model,
                                        const ChunkSink& sink = {}) {
    config.validate();
    auto particles = sample_prior(config.priors, config.n_stage1,
                                  derive_seed(config.seed, detail::kDrawStage1));
    const std::size_t chunk = 8192;
    for (std::size_t begin = 0; begin < particles.size(); begin += chunk) {
        const std::size_t end = std::min(begin + chunk, particles.size());
        parallel_for(end - begin, config.workers, [&](std::size_t k) {
            const std::size_t i = begin + k;
            particles[i].seed = derive_seed(config.seed, detail::kSimStage1, i);
            detail::simulate_and_label(particles[i], model, config.summaries);
        });
        if (sink) sink(std::span<const Particle>(particles).subspan(begin, end - begin));
    }
    const auto n_accepted = static_cast<std::size_t>(
        std::count_if(particles.begin(), particles.end(),
                      [](const Particle& p) { return p.accepted(); }));
    if (n_accepted == 0)
        throw std::runtime_error(
            "stage 1 accepted no particles; cannot train a classifier. "
            "Increase n_stage1 or loosen the summary thresholds.");
    return particles;
}

/// Classifier features for the labelled stage-1 output: sampling-scale
/// parameter vectors with 0/1 acceptance labels.
inline Dataset training_set(std::span<const Particle> particles,
                            std::span<const PriorSpec> priors) {
    Dataset data;
    data.n_rows = particles.size();
    data.n_cols = priors.size();
    data.x.reserve(data.n_rows * data.n_cols);
    data.y.reserve(data.n_rows);
    for (const auto& particle : particles) {
        if (particle.label == Label::unevaluated)
            throw std::invalid_argument("training_set: unevaluated particle");
        data.x.insert(data.x.end(), particle.params_scaled.begin(),
                      particle.params_scaled.end());
        data.y.push_back(particle.accepted() ? 1 : 0);
    }
    return data;
}

struct MarginalSummary {
    std::string name;
    double mean = 0.0, median = 0.0, q025 = 0.0, q975 = 0.0;
    double min = 0.0, max = 0.0;
};

/// Linear-interpolation quantile of a sorted sample.
inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty sample");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double w = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - w) + sorted[lo + 1] * w;
}

/// Natural-scale marginal summaries (mean, median, central 95% interval,
/// range) for each parameter of an accepted set.
inline std::vector<MarginalSummary> posterior_marginals(std::span<const Particle> particles,
                                                        std::span<const PriorSpec> priors) {
    if (particles.empty()) throw std::invalid_argument("posterior_marginals: empty posterior");
    std::vector<MarginalSummary> out(priors.size());
    std::vector<double> column(particles.size());
    for (std::size_t k = 0; k < priors.size(); ++k) {
        for (std::size_t i = 0; i < particles.size(); ++i) column[i] = particles[i].params[k];
        std::sort(column.begin(), column.end());
        double sum = 0.0;
        for (double v : column) sum += v;
        out[k] = {priors[k].name,
                  sum / static_cast<double>(column.size()),
                  quantile_sorted(column, 0.5),
                  quantile_sorted(column, 0.025),
                  quantile_sorted(column, 0.975),
                  column.front(),
                  column.back()};
    }
    return out;
}

struct EfficiencyReport {
    std::size_t posterior_count = 0;
    std::size_t stage1_sims = 0;
    std::size_t stage2_sims = 0; // gate survivors actually simulated
    double ratio = 0.0;          // posterior_count / (stage1_sims + stage2_sims)
};

/// Posterior-samples-per-simulation ratio. The denominator counts stage-1
/// simulations plus stage-2 simulations of gate survivors; candidates the
/// gate filtered out cost no simulation.
inline double efficiency(std::size_t posterior_count, std::size_t total_simulations) {
    if (total_simulations == 0) throw std::invalid_argument("efficiency: zero simulations");
    if (posterior_count == 0) throw std::invalid_argument("efficiency: empty posterior");
    return static_cast<double>(posterior_count) / static_cast<double>(total_simulations);
}

struct PosteriorSample {
    std::vector<Particle> particles; // stage-2 survivors that passed every summary
    std::vector<MarginalSummary> marginals;
    EfficiencyReport efficiency;
    std::size_t n_candidates = 0;
    std::size_t n_survivors = 0; // candidates at or above the probability gate
};

/// Stage 2: sample fresh candidates, keep those the forest scores at or
/// above the probability threshold, simulate only the survivors, and return
/// the accepted set with marginals and the efficiency report.
inline PosteriorSample run_stage2(const StageConfig& config, const Forest& forest,
                                  const ModelFn& model) {
    config.validate();
    if (forest.p != config.priors.size())
        throw std::invalid_argument("run_stage2: forest trained on " + std::to_string(forest.p) +
                                    " parameters, config has " +
                                    std::to_string(config.priors.size()));

    auto candidates = sample_prior(config.priors, config.n_stage2,
                                   derive_seed(config.seed, detail::kDrawStage2));
    parallel_for(candidates.size(), config.workers, [&](std::size_t i) {
        candidates[i].prob = predict_proba(forest, candidates[i].params_scaled);
    });

    std::vector<Particle> survivors;
    for (auto& candidate : candidates)
        if (candidate.prob >= config.prob_threshold) survivors.push_back(std::move(candidate));
    if (survivors.empty())
        throw std::runtime_error("no stage-2 candidates reached the probability threshold of " +
                                 std::to_string(config.prob_threshold) +
                                 "; lower the threshold or retrain with more stage-1 data.");

    parallel_for(survivors.size(), config.workers, [&](std::size_t i) {
        survivors[i].seed = derive_seed(config.seed, detail::kSimStage2, survivors[i].index);
        detail::simulate_and_label(survivors[i], model, config.summaries);
    });

    PosteriorSample posterior;
    posterior.n_candidates = config.n_stage2;
    posterior.n_survivors = survivors.size();
    for (auto& survivor : survivors)
        if (survivor.accepted()) posterior.particles.push_back(std::move(survivor));

    posterior.efficiency.posterior_count = posterior.particles.size();
    posterior.efficiency.stage1_sims = config.n_stage1;
    posterior.efficiency.stage2_sims = posterior.n_survivors;
    posterior.efficiency.ratio =
        posterior.particles.empty()
            ? 0.0
            : efficiency(posterior.particles.size(), config.n_stage1 + posterior.n_survivors);
    if (!posterior.particles.empty())
        posterior.marginals = posterior_marginals(posterior.particles, config.priors);
    return posterior;
}

struct BaselineResult {
    std::vector<Particle> particles; // accepted, in sampling order
    std::size_t simulations_used = 0;
    double acceptance_rate = 0.0;
};

/// Prior draws for indices [begin, end) of the baseline stream, matching
/// what a single pass over all indices would produce there.
inline std::vector<Particle> sample_prior_range(const StageConfig& config, std::size_t begin,
                                                std::size_t end) {
    const std::uint64_t stream = derive_seed(config.seed, detail::kDrawBaseline);
    std::vector<Particle> particles(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
        Rng rng(derive_seed(stream, 0x64726177ULL, i));
        Particle& particle = particles[i - begin];
        particle.index = i;
        particle.params.resize(config.priors.size());
        particle.params_scaled.resize(config.priors.size());
        for (std::size_t k = 0; k < config.priors.size(); ++k) {
            const double scaled = rng.uniform(config.priors[k].lower, config.priors[k].upper);
            particle.params_scaled[k] = scaled;
            particle.params[k] = config.priors[k].to_natural(scaled);
        }
    }
    return particles;
}

/// Plain ABC rejection: simulate prior draws in index order until
/// target_accepted particles pass every summary. Work is chunked so the
/// accepted set and the simulation count depend only on the seed, not on
/// the worker count.
inline BaselineResult run_rejection_baseline(const StageConfig& config, const ModelFn& model,
                                             std::size_t target_accepted, std::size_t budget) {
    config.validate();
    if (target_accepted < 1)
        throw std::invalid_argument("run_rejection_baseline: target must be >= 1");
    if (budget < target_accepted)
        throw std::invalid_argument("run_rejection_baseline: budget below target");

    BaselineResult result;
    const std::size_t chunk = 4096;
    for (std::size_t begin = 0; begin < budget; begin += chunk) {
        const std::size_t end = std::min(begin + chunk, budget);
        auto batch = sample_prior_range(config, begin, end);
        parallel_for(batch.size(), config.workers, [&](std::size_t k) {
            batch[k].seed = derive_seed(config.seed, detail::kSimBaseline, batch[k].index);
            detail::simulate_and_label(batch[k], model, config.summaries);
        });
        for (auto& particle : batch) {
            result.simulations_used = particle.index + 1;
            if (particle.accepted()) result.particles.push_back(std::move(particle));
            if (result.particles.size() == target_accepted) break;
        }
        if (result.particles.size() == target_accepted) break;
    }
    if (result.particles.size() < target_accepted)
        throw std::runtime_error("rejection baseline exhausted its budget of " +
                                 std::to_string(budget) + " simulations with only " +
                                 std::to_string(result.particles.size()) + " of " +
                                 std::to_string(target_accepted) + " acceptances");
    result.acceptance_rate = static_cast<double>(result.particles.size()) /
                             static_cast<double>(result.simulations_used);
    return result;
}

} // namespace abcrf
