#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "abcrf/random.hpp"
#include "abcrf/stats.hpp"

namespace abcrf {

/// Uniform prior for one parameter, either on the natural scale or on
/// log10 (bounds are then exponents). Sampling, and classifier features,
/// live on the declared scale; simulators consume the natural value.
struct PriorSpec {
    enum class Scale { natural, log10 };

    std::string name;
    Scale scale = Scale::natural;
    double lower = 0.0;
    double upper = 1.0;

    void validate() const {
        if (name.empty()) throw std::invalid_argument("PriorSpec: empty parameter name");
        if (!(lower < upper))
            throw std::invalid_argument("PriorSpec '" + name + "': need lower < upper");
        if (!std::isfinite(lower) || !std::isfinite(upper))
            throw std::invalid_argument("PriorSpec '" + name + "': bounds must be finite");
    }

    double to_natural(double scaled) const {
        return scale == Scale::log10 ? std::pow(10.0, scaled) : scaled;
    }
    double to_scaled(double natural) const {
        return scale == Scale::log10 ? std::log10(natural) : natural;
    }
    bool contains_scaled(double scaled) const { return scaled >= lower && scaled <= upper; }
};

enum class Label : std::uint8_t { unevaluated, rejected, accepted };

/// One candidate parameter vector flowing through the pipeline.
struct Particle {
    std::size_t index = 0;
    std::uint64_t seed = 0;                // simulation seed used for this particle
    std::vector<double> params;            // natural scale
    std::vector<double> params_scaled;     // sampling scale (classifier features)
    std::vector<SummaryValue> summaries;
    Label label = Label::unevaluated;
    double prob = std::numeric_limits<double>::quiet_NaN(); // stage-2 prediction

    bool accepted() const { return label == Label::accepted; }
};

/// n independent draws, uniform on each parameter's declared scale.
/// Particle i draws from a stream derived from (seed, i), so the result is
/// identical however the draws are later distributed over workers.
inline std::vector<Particle> sample_prior(std::span<const PriorSpec> priors, std::size_t n,
                                          std::uint64_t seed) {
    if (priors.empty()) throw std::invalid_argument("sample_prior: no priors given");
    for (const auto& prior : priors) prior.validate();
    std::vector<Particle> particles(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed, 0x64726177ULL, i));
        Particle& particle = particles[i];
        particle.index = i;
        particle.params.resize(priors.size());
        particle.params_scaled.resize(priors.size());
        for (std::size_t k = 0; k < priors.size(); ++k) {
            const double scaled = rng.uniform(priors[k].lower, priors[k].upper);
            particle.params_scaled[k] = scaled;
            particle.params[k] = priors[k].to_natural(scaled);
        }
    }
    return particles;
}

} // namespace abcrf
