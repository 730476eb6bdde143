#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "abcrf/csv.hpp"
#include "abcrf/prior.hpp"
#include "abcrf/stats.hpp"

namespace abcrf {

/// Particle CSV layout: index,seed,<param columns>,<summary columns>,label[,prob].
/// Posterior files drop the label column. Parameters are written on the
/// natural scale with round-trip-exact formatting. The writer appends and
/// flushes chunk by chunk, so long stage runs persist as they progress.
class ParticleCsvWriter {
  public:
    ParticleCsvWriter(const std::string& path, std::span<const PriorSpec> priors,
                      std::span<const SummarySpec> summaries, bool with_label, bool with_prob)
        : out_(open_output(path)), with_label_(with_label), with_prob_(with_prob) {
        out_ << "index,seed";
        for (const auto& prior : priors) out_ << ',' << prior.name;
        for (const auto& summary : summaries) out_ << ',' << summary.name;
        if (with_label_) out_ << ",label";
        if (with_prob_) out_ << ",prob";
        out_ << '\n';
    }

    void append(std::span<const Particle> particles) {
        for (const auto& particle : particles) {
            out_ << particle.index << ',' << particle.seed;
            for (double v : particle.params) out_ << ',' << format_double(v);
            for (const auto& s : particle.summaries) out_ << ',' << format_double(s.value);
            if (with_label_) out_ << ',' << (particle.accepted() ? 1 : 0);
            if (with_prob_) out_ << ',' << format_double(particle.prob);
            out_ << '\n';
        }
        out_.flush();
    }

  private:
    std::ofstream out_;
    bool with_label_, with_prob_;
};

inline void write_particles_csv(const std::string& path, std::span<const Particle> particles,
                                std::span<const PriorSpec> priors,
                                std::span<const SummarySpec> summaries, bool with_label,
                                bool with_prob) {
    ParticleCsvWriter writer(path, priors, summaries, with_label, with_prob);
    writer.append(particles);
}

struct ParticleFile {
    std::vector<Particle> particles;
    bool has_label = false;
    bool has_prob = false;
};

/// Reads a particle CSV written by write_particles_csv, validating the
/// header against the configured priors and summaries. Sampling-scale
/// features are re-derived from the priors; summary acceptance flags are
/// re-derived from the specs.
inline ParticleFile read_particles_csv(const std::string& path,
                                       std::span<const PriorSpec> priors,
                                       std::span<const SummarySpec> summaries) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw std::runtime_error(path + ": empty particle file");

    const auto header = split_csv_line(lines[0]);
    std::vector<std::string> expected = {"index", "seed"};
    for (const auto& prior : priors) expected.push_back(prior.name);
    for (const auto& summary : summaries) expected.push_back(summary.name);
    if (header.size() < expected.size())
        throw std::runtime_error(path + ": header has " + std::to_string(header.size()) +
                                 " columns, expected at least " +
                                 std::to_string(expected.size()));
    for (std::size_t k = 0; k < expected.size(); ++k)
        if (header[k] != expected[k])
            throw std::runtime_error(path + ": header column " + std::to_string(k + 1) + " is '" +
                                     header[k] + "', expected '" + expected[k] + "'");
    ParticleFile file;
    for (std::size_t k = expected.size(); k < header.size(); ++k) {
        if (header[k] == "label")
            file.has_label = true;
        else if (header[k] == "prob")
            file.has_prob = true;
        else
            throw std::runtime_error(path + ": unexpected column '" + header[k] + "'");
    }

    for (std::size_t row = 1; row < lines.size(); ++row) {
        if (lines[row].empty()) continue;
        const auto fields = split_csv_line(lines[row]);
        const std::string where = path + ": line " + std::to_string(row + 1);
        if (fields.size() != header.size())
            throw std::runtime_error(where + ": has " + std::to_string(fields.size()) +
                                     " fields, expected " + std::to_string(header.size()));
        Particle particle;
        particle.index = static_cast<std::size_t>(parse_double(fields[0], where + " (index)"));
        particle.seed = std::stoull(fields[1]);
        std::size_t col = 2;
        for (const auto& prior : priors) {
            const double natural = parse_double(fields[col++], where + " (" + prior.name + ")");
            particle.params.push_back(natural);
            particle.params_scaled.push_back(prior.to_scaled(natural));
        }
        for (const auto& summary : summaries) {
            const double value = parse_double(fields[col++], where + " (" + summary.name + ")");
            particle.summaries.push_back({summary.name, value, summary.accepts(value)});
        }
        if (file.has_label) {
            const double label = parse_double(fields[col++], where + " (label)");
            particle.label = label != 0.0 ? Label::accepted : Label::rejected;
        }
        if (file.has_prob) particle.prob = parse_double(fields[col++], where + " (prob)");
        file.particles.push_back(std::move(particle));
    }
    return file;
}

} // namespace abcrf
