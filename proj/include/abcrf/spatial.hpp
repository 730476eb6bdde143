#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "abcrf/landscape.hpp"
#include "abcrf/random.hpp"

namespace abcrf {

struct SpatialParams {
    double epsilon = 0.0; // primary transmission rate, per year
    double beta = 0.0;    // secondary transmission rate, per year
    double alpha = 0.0;   // dispersal scale, km
    double r = 0.0;       // local epidemic growth rate, per year
    double p0 = 0.0;      // within-cell prevalence at infection

    void validate() const {
        auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
        auto non_negative = [](double v) { return v >= 0.0 && std::isfinite(v); };
        if (!non_negative(epsilon))
            throw std::invalid_argument("SpatialParams: epsilon must be >= 0");
        if (!non_negative(beta)) throw std::invalid_argument("SpatialParams: beta must be >= 0");
        if (!positive(alpha)) throw std::invalid_argument("SpatialParams: alpha must be > 0");
        if (!positive(r)) throw std::invalid_argument("SpatialParams: r must be > 0");
        if (!(p0 > 0.0 && p0 < 1.0)) throw std::invalid_argument("SpatialParams: p0 must be in (0,1)");
    }
};

/// Isotropic exponential dispersal density, (1/(2*pi*alpha)) * exp(-d/alpha).
inline double dispersal_kernel(double alpha, double d) {
    if (!(alpha > 0.0)) throw std::invalid_argument("dispersal_kernel: alpha must be > 0");
    if (!(d >= 0.0)) throw std::invalid_argument("dispersal_kernel: distance must be >= 0");
    return std::exp(-d / alpha) / (2.0 * std::numbers::pi * alpha);
}

/// Within-cell infected fraction for a cell infected at t_i, evaluated at t.
/// Logistic in (t - t_i), starting from p0 and saturating towards 1.
inline double local_prevalence(const SpatialParams& params, double t, double t_i) {
    params.validate();
    if (t < t_i) throw std::invalid_argument("local_prevalence: t before infection time");
    return 1.0 / (1.0 + (1.0 / params.p0 - 1.0) * std::exp(-params.r * (t - t_i)));
}

struct InfectionEvent {
    double time = 0.0;
    CellId cell;
};

/// Infection record of one outbreak: which cells are infected and when.
/// Events are chronological; a cell is infected at most once; the origin is
/// infected at time zero.
class OutbreakState {
  public:
    OutbreakState(const Landscape& land, CellId origin, double horizon)
        : n_rows_(land.n_rows()), n_cols_(land.n_cols()), origin_(origin), horizon_(horizon),
          times_(land.n_cells(), std::numeric_limits<double>::quiet_NaN()) {
        if (!(horizon > 0.0)) throw std::invalid_argument("OutbreakState: horizon must be > 0");
        land.index(origin); // bounds check
        add_infection(origin, 0.0);
    }

    void add_infection(CellId cell, double t) {
        const std::size_t idx = index_of(cell);
        if (!std::isnan(times_[idx]))
            throw std::invalid_argument("OutbreakState: cell already infected");
        if (!(t >= 0.0) || t > horizon_)
            throw std::invalid_argument("OutbreakState: infection time outside [0, horizon]");
        if (!events_.empty() && t < events_.back().time)
            throw std::invalid_argument("OutbreakState: infection times must be non-decreasing");
        times_[idx] = t;
        events_.push_back({t, cell});
    }

    bool infected_by(CellId cell, double t) const {
        const double ti = times_[index_of(cell)];
        return !std::isnan(ti) && ti <= t;
    }

    /// Infection time of a cell, or NaN while susceptible.
    double infection_time(CellId cell) const { return times_[index_of(cell)]; }

    std::size_t n_infected_by(double t) const {
        auto it = std::upper_bound(events_.begin(), events_.end(), t,
                                   [](double v, const InfectionEvent& e) { return v < e.time; });
        return static_cast<std::size_t>(it - events_.begin());
    }

    const std::vector<InfectionEvent>& events() const { return events_; }
    CellId origin() const { return origin_; }
    double horizon() const { return horizon_; }
    int n_rows() const { return n_rows_; }
    int n_cols() const { return n_cols_; }

  private:
    std::size_t index_of(CellId c) const {
        if (c.row < 0 || c.row >= n_rows_ || c.col < 0 || c.col >= n_cols_)
            throw std::invalid_argument("OutbreakState: cell out of bounds");
        return static_cast<std::size_t>(c.row) * n_cols_ + c.col;
    }

    int n_rows_, n_cols_;
    CellId origin_;
    double horizon_;
    std::vector<double> times_;
    std::vector<InfectionEvent> events_;
};

/// Instantaneous infection rate of a susceptible cell at time t:
/// h_i * (epsilon + beta * sum over infected j != i of h_j * rho_j(t) * K(alpha, d_ij)).
inline double infection_hazard(CellId cell, double t, const OutbreakState& state,
                               const SpatialParams& params, const Landscape& land) {
    params.validate();
    if (state.infected_by(cell, t))
        throw std::invalid_argument("infection_hazard: cell is already infected at t");
    const double hi = land.density(cell);
    double pressure = 0.0;
    for (const auto& e : state.events()) {
        if (e.time > t) break;
        pressure += land.density(e.cell) * local_prevalence(params, t, e.time) *
                    dispersal_kernel(params.alpha, land.distance(cell, e.cell));
    }
    return hi * (params.epsilon + params.beta * pressure);
}

namespace detail {

/// Fenwick tree over per-cell proposal rates: O(n) rebuild after each
/// infection event, O(log n) weighted selection per proposal.
class RateTree {
  public:
    void rebuild(const std::vector<double>& rates) {
        n_ = rates.size();
        tree_.assign(n_ + 1, 0.0);
        for (std::size_t i = 1; i <= n_; ++i) {
            tree_[i] += rates[i - 1];
            const std::size_t parent = i + (i & (~i + 1));
            if (parent <= n_) tree_[parent] += tree_[i];
        }
        total_ = 0.0;
        for (std::size_t i = n_; i > 0; i -= i & (~i + 1)) total_ += tree_[i];
    }

    double total() const { return total_; }

    /// Smallest index whose prefix sum exceeds target.
    std::size_t sample(double target) const {
        std::size_t pos = 0, step = 1;
        while (step * 2 <= n_) step *= 2;
        for (; step > 0; step /= 2) {
            const std::size_t next = pos + step;
            if (next <= n_ && tree_[next] <= target) {
                target -= tree_[next];
                pos = next;
            }
        }
        return pos; // 0-based element index
    }

  private:
    std::vector<double> tree_;
    std::size_t n_ = 0;
    double total_ = 0.0;
};

} // namespace detail

/// Exact stochastic simulation of the spatial process by thinning. Between
/// infection events every susceptible cell's hazard is bounded by its value
/// with all within-cell prevalences at 1 (the bound holds for all later
/// times because each rho_j is increasing); proposals are drawn from the
/// bound process and accepted with probability hazard/bound. Kernel terms
/// below 1e-12 of the zero-distance value are dropped from both the bound
/// and the accepted hazard, keeping the two sides consistent.
inline OutbreakState simulate_outbreak(const SpatialParams& params, const Landscape& land,
                                       CellId origin, double horizon, std::uint64_t seed) {
    params.validate();
    if (!(horizon > 0.0)) throw std::invalid_argument("simulate_outbreak: horizon must be > 0");
    if (!(land.density(origin) > 0.0))
        throw std::invalid_argument("simulate_outbreak: origin cell (" +
                                    std::to_string(origin.row) + "," + std::to_string(origin.col) +
                                    ") has zero host density");

    const int n_rows = land.n_rows(), n_cols = land.n_cols();
    const std::size_t n = land.n_cells();
    const auto& h = land.densities();

    // Kernel values depend only on |row offset|, |col offset|.
    std::vector<double> ktab(static_cast<std::size_t>(n_rows) * n_cols);
    const double kmax = dispersal_kernel(params.alpha, 0.0);
    for (int dr = 0; dr < n_rows; ++dr)
        for (int dc = 0; dc < n_cols; ++dc) {
            const double d = land.cell_size() *
                             std::sqrt(static_cast<double>(dr) * dr + static_cast<double>(dc) * dc);
            const double k = dispersal_kernel(params.alpha, d);
            ktab[static_cast<std::size_t>(dr) * n_cols + dc] = k < kmax * 1e-12 ? 0.0 : k;
        }
    auto kval = [&](int r1, int c1, int r2, int c2) {
        return ktab[static_cast<std::size_t>(std::abs(r1 - r2)) * n_cols + std::abs(c1 - c2)];
    };

    OutbreakState state(land, origin, horizon);
    Rng rng(seed);

    // Infection sources, appended as cells infect. rho_j(t) is evaluated as
    // 1 / (1 + q_j * exp(-r t)) with q_j = (1/p0 - 1) * exp(r t_j) cached per
    // source, so one exp per proposal covers every source. Falls back to the
    // direct form when q_j could overflow.
    const bool split_rho = params.r * horizon + std::log(1.0 / params.p0) < 690.0;
    std::vector<int> src_row, src_col;
    std::vector<double> src_h, src_time, src_q;

    // Per-cell proposal rate: hazard with every rho_j set to 1. Zero for
    // infected cells and cells that can never infect (h == 0).
    std::vector<double> bound(n);
    std::vector<std::uint8_t> susceptible(n);
    for (std::size_t i = 0; i < n; ++i) {
        susceptible[i] = h[i] > 0.0;
        bound[i] = susceptible[i] ? h[i] * params.epsilon : 0.0;
    }

    detail::RateTree tree;
    auto absorb_source = [&](CellId cell, double t) {
        const std::size_t j = land.index(cell);
        susceptible[j] = 0;
        bound[j] = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (susceptible[i])
                bound[i] += h[i] * params.beta * h[j] *
                            kval(static_cast<int>(i / n_cols), static_cast<int>(i % n_cols),
                                 cell.row, cell.col);
        }
        src_row.push_back(cell.row);
        src_col.push_back(cell.col);
        src_h.push_back(h[j]);
        src_time.push_back(t);
        src_q.push_back((1.0 / params.p0 - 1.0) * std::exp(params.r * t));
        tree.rebuild(bound);
        if (!std::isfinite(tree.total()))
            throw std::runtime_error("simulate_outbreak: non-finite total rate");
    };
    absorb_source(origin, 0.0);

    double t = 0.0;
    while (true) {
        const double total = tree.total();
        if (!(total > 0.0)) break;
        t += rng.exponential(total);
        if (t >= horizon) break;

        const std::size_t i = tree.sample(rng.uniform01() * total);
        const double bi = bound[i];
        if (!(bi > 0.0)) continue; // rounding noise in the tree; treat as rejection

        const int ri = static_cast<int>(i / n_cols), ci = static_cast<int>(i % n_cols);
        double pressure = 0.0;
        if (split_rho) {
            const double decay = std::exp(-params.r * t);
            for (std::size_t s = 0; s < src_time.size(); ++s) {
                const double k = kval(ri, ci, src_row[s], src_col[s]);
                if (k == 0.0) continue;
                pressure += src_h[s] * k / (1.0 + src_q[s] * decay);
            }
        } else {
            for (std::size_t s = 0; s < src_time.size(); ++s) {
                const double k = kval(ri, ci, src_row[s], src_col[s]);
                if (k == 0.0) continue;
                const double rho = 1.0 / (1.0 + (1.0 / params.p0 - 1.0) *
                                                    std::exp(-params.r * (t - src_time[s])));
                pressure += src_h[s] * rho * k;
            }
        }
        const double hazard = h[i] * (params.epsilon + params.beta * pressure);
        const double ratio = std::min(1.0, hazard / bi);
        if (rng.uniform01() < ratio) {
            const CellId cell{ri, ci};
            state.add_infection(cell, t);
            absorb_source(cell, t);
        }
    }
    return state;
}

} // namespace abcrf
