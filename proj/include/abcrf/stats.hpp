#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "abcrf/csv.hpp"
#include "abcrf/landscape.hpp"
#include "abcrf/spatial.hpp"

namespace abcrf {

/// Acceptance rule for one summary statistic: either "value below a
/// threshold" or "value inside an interval".
struct SummarySpec {
    enum class Kind { threshold, interval };

    std::string name;
    Kind kind = Kind::threshold;
    double threshold = 0.0;
    double lower = 0.0, upper = 0.0;

    void validate() const {
        if (name.empty()) throw std::invalid_argument("SummarySpec: empty name");
        if (kind == Kind::threshold) {
            if (!(threshold > 0.0)) throw std::invalid_argument("SummarySpec '" + name +
                                                                "': threshold must be > 0");
        } else if (!(lower < upper)) {
            throw std::invalid_argument("SummarySpec '" + name + "': need lower < upper");
        }
    }

    bool accepts(double value) const {
        return kind == Kind::threshold ? value < threshold : (value >= lower && value <= upper);
    }
};

struct SummaryValue {
    std::string name;
    double value = 0.0;
    bool accepted = false;
};

inline std::vector<SummaryValue> evaluate_summaries(std::span<const double> values,
                                                    std::span<const SummarySpec> specs) {
    if (values.size() != specs.size())
        throw std::invalid_argument("evaluate_summaries: value/spec count mismatch");
    std::vector<SummaryValue> out(specs.size());
    for (std::size_t k = 0; k < specs.size(); ++k)
        out[k] = {specs[k].name, values[k], specs[k].accepts(values[k])};
    return out;
}

/// Sum of squared differences between observed and simulated infected counts.
inline double ss_sir(std::span<const double> observed, std::span<const double> simulated) {
    if (observed.empty()) throw std::invalid_argument("ss_sir: empty observation vector");
    if (observed.size() != simulated.size())
        throw std::invalid_argument("ss_sir: length mismatch");
    double ss = 0.0;
    for (std::size_t k = 0; k < observed.size(); ++k) {
        const double d = observed[k] - simulated[k];
        ss += d * d;
    }
    return ss;
}

namespace detail {

inline void require_same_grid(const OutbreakState& state, const Landscape& land,
                              const char* where) {
    if (state.n_rows() != land.n_rows() || state.n_cols() != land.n_cols())
        throw std::invalid_argument(std::string(where) + ": state/landscape grid mismatch");
}

/// Largest squared centre distance (in cell units) from the origin to any
/// cell infected by time t. Integer-exact, so disc-membership comparisons
/// against it carry no rounding.
inline long long max_spread2_cells(const OutbreakState& state, double t, const Landscape& land) {
    long long best = 0;
    for (const auto& e : state.events()) {
        if (e.time > t) break;
        best = std::max(best, land.dist2_cells(state.origin(), e.cell));
    }
    return best;
}

} // namespace detail

/// Maximum Euclidean distance (km) from the origin to any cell infected by
/// time t; zero while only the origin is infected.
inline double max_spread(const OutbreakState& state, double t, const Landscape& land) {
    if (!(t >= 0.0)) throw std::invalid_argument("max_spread: t must be >= 0");
    detail::require_same_grid(state, land, "max_spread");
    return land.cell_size() *
           std::sqrt(static_cast<double>(detail::max_spread2_cells(state, t, land)));
}

/// Sum over years t = 1..T of squared deviations between observed and
/// simulated maximum radial spread, T given by the observation vector.
inline double ss_radial(std::span<const double> observed_d, const OutbreakState& state,
                        const Landscape& land) {
    if (observed_d.empty()) throw std::invalid_argument("ss_radial: no yearly observations");
    detail::require_same_grid(state, land, "ss_radial");
    double ss = 0.0;
    for (std::size_t k = 0; k < observed_d.size(); ++k) {
        const double d = observed_d[k] - max_spread(state, static_cast<double>(k + 1), land);
        ss += d * d;
    }
    return ss;
}

/// Fraction of infected cells among all cells whose centres lie within the
/// maximum spread radius of the origin (boundary inclusive). The degenerate
/// radius-zero disc contains exactly the origin, giving 1.
inline double intensity(const OutbreakState& state, double t, const Landscape& land) {
    if (!(t >= 0.0)) throw std::invalid_argument("intensity: t must be >= 0");
    detail::require_same_grid(state, land, "intensity");
    const long long radius2 = detail::max_spread2_cells(state, t, land);
    const std::size_t infected = state.n_infected_by(t);
    std::size_t disc = 0;
    for (int row = 0; row < land.n_rows(); ++row)
        for (int col = 0; col < land.n_cols(); ++col)
            if (land.dist2_cells(state.origin(), CellId{row, col}) <= radius2) ++disc;
    return static_cast<double>(infected) / static_cast<double>(disc);
}

namespace detail {

/// Nelder-Mead downhill simplex. Returns the best point found; converges
/// when both the objective spread and the simplex diameter are small.
inline std::vector<double> nelder_mead(const std::function<double(std::span<const double>)>& f,
                                       std::vector<double> x0, double scale, double tol,
                                       int max_iter) {
    const std::size_t dim = x0.size();
    std::vector<std::vector<double>> pts(dim + 1, x0);
    for (std::size_t k = 0; k < dim; ++k) pts[k + 1][k] += scale;
    std::vector<double> fv(dim + 1);
    for (std::size_t k = 0; k <= dim; ++k) fv[k] = f(pts[k]);

    auto order = [&] {
        std::vector<std::size_t> idx(dim + 1);
        for (std::size_t k = 0; k <= dim; ++k) idx[k] = k;
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        std::vector<std::vector<double>> p2(dim + 1);
        std::vector<double> f2(dim + 1);
        for (std::size_t k = 0; k <= dim; ++k) {
            p2[k] = pts[idx[k]];
            f2[k] = fv[idx[k]];
        }
        pts.swap(p2);
        fv.swap(f2);
    };

    for (int iter = 0; iter < max_iter; ++iter) {
        order();
        double diameter = 0.0;
        for (std::size_t k = 1; k <= dim; ++k)
            for (std::size_t j = 0; j < dim; ++j)
                diameter = std::max(diameter, std::abs(pts[k][j] - pts[0][j]));
        if (std::abs(fv[dim] - fv[0]) <= tol * (1.0 + std::abs(fv[0])) && diameter <= 1e-10)
            break;

        std::vector<double> centroid(dim, 0.0);
        for (std::size_t k = 0; k < dim; ++k)
            for (std::size_t j = 0; j < dim; ++j) centroid[j] += pts[k][j] / dim;

        auto blend = [&](double coeff) {
            std::vector<double> p(dim);
            for (std::size_t j = 0; j < dim; ++j)
                p[j] = centroid[j] + coeff * (pts[dim][j] - centroid[j]);
            return p;
        };

        auto reflected = blend(-1.0);
        const double fr = f(reflected);
        if (fr < fv[0]) {
            auto expanded = blend(-2.0);
            const double fe = f(expanded);
            if (fe < fr) {
                pts[dim] = std::move(expanded);
                fv[dim] = fe;
            } else {
                pts[dim] = std::move(reflected);
                fv[dim] = fr;
            }
        } else if (fr < fv[dim - 1]) {
            pts[dim] = std::move(reflected);
            fv[dim] = fr;
        } else {
            auto contracted = blend(fr < fv[dim] ? -0.5 : 0.5);
            const double fc = f(contracted);
            if (fc < std::min(fr, fv[dim])) {
                pts[dim] = std::move(contracted);
                fv[dim] = fc;
            } else {
                for (std::size_t k = 1; k <= dim; ++k) {
                    for (std::size_t j = 0; j < dim; ++j)
                        pts[k][j] = pts[0][j] + 0.5 * (pts[k][j] - pts[0][j]);
                    fv[k] = f(pts[k]);
                }
            }
        }
    }
    order();
    return pts[0];
}

} // namespace detail

struct LogisticFit {
    double r = 0.0;
    double p0 = 0.0;
    double residual = 0.0; // sum of squared errors at the fit
};

/// Least-squares fit of the within-cell growth curve
/// rho(t) = 1 / (1 + (1/p0 - 1) exp(-r t)) to (time, prevalence) samples.
/// Coarse grid search over (log10 r, log10 p0) seeds a Nelder-Mead refine.
inline LogisticFit fit_logistic(std::span<const std::pair<double, double>> samples) {
    if (samples.size() < 3) throw std::invalid_argument("fit_logistic: need at least 3 samples");
    for (const auto& [t, y] : samples)
        if (!(y > 0.0 && y < 1.0))
            throw std::invalid_argument("fit_logistic: prevalence must be in (0,1)");
    const double first = samples[0].second;
    if (std::all_of(samples.begin(), samples.end(),
                    [&](const auto& s) { return s.second == first; }))
        throw std::invalid_argument("fit_logistic: degenerate data (all prevalences equal)");

    auto objective = [&](std::span<const double> z) {
        if (z[1] >= 0.0) return 1e300; // p0 must stay below 1
        const double r = std::pow(10.0, z[0]);
        const double p0 = std::pow(10.0, z[1]);
        double sse = 0.0;
        for (const auto& [t, y] : samples) {
            const double rho = 1.0 / (1.0 + (1.0 / p0 - 1.0) * std::exp(-r * t));
            sse += (rho - y) * (rho - y);
        }
        return sse;
    };

    std::vector<double> best = {0.0, -2.0};
    double best_f = objective(best);
    for (int a = 0; a < 20; ++a)
        for (int b = 0; b < 20; ++b) {
            const std::vector<double> z = {-2.0 + 5.0 * a / 19.0, -6.0 + 5.98 * b / 19.0};
            const double fz = objective(z);
            if (fz < best_f) {
                best_f = fz;
                best = z;
            }
        }

    best = detail::nelder_mead(objective, best, 0.25, 1e-12, 4000);
    best = detail::nelder_mead(objective, best, 1e-3, 1e-12, 2000); // polish
    return {std::pow(10.0, best[0]), std::pow(10.0, best[1]), objective(best)};
}

/// Reads (time, prevalence) samples from a CSV with header `t,prevalence`.
inline std::vector<std::pair<double, double>> read_prevalence_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty() || split_csv_line(lines[0]) != std::vector<std::string>{"t", "prevalence"})
        throw std::runtime_error(path + ": expected header 't,prevalence'");
    std::vector<std::pair<double, double>> samples;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        if (lines[k].empty()) continue;
        const auto fields = split_csv_line(lines[k]);
        const std::string where = path + ": line " + std::to_string(k + 1);
        if (fields.size() != 2) throw std::runtime_error(where + ": expected two fields");
        samples.emplace_back(parse_double(fields[0], where + " (t)"),
                             parse_double(fields[1], where + " (prevalence)"));
    }
    return samples;
}

} // namespace abcrf
