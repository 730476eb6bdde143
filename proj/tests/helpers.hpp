#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

// Shared oracle machinery for the test suites. Everything here is an
// independent route to the quantities the library computes: keep it free of
// library internals beyond plain data types.
namespace testutil {

/// Two-sided Kolmogorov-Smirnov distance between a sample and a CDF.
inline double ks_distance(std::vector<double> sample,
                          const std::function<double(double)>& cdf) {
    if (sample.empty()) throw std::invalid_argument("ks_distance: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max(d, std::max((i + 1) / n - f, f - i / n));
    }
    return d;
}

/// Asymptotic one-sample KS critical value at the given significance.
inline double ks_critical(std::size_t n, double significance) {
    // c(0.05) = 1.358, c(0.01) = 1.628
    const double c = significance <= 0.01 ? 1.628 : 1.358;
    return c / std::sqrt(static_cast<double>(n));
}

/// Cumulative integral of a smooth function on a fine uniform grid
/// (composite Simpson per step), linearly interpolated between grid points.
class CumulativeIntegral {
  public:
    CumulativeIntegral(const std::function<double(double)>& f, double t0, double t1,
                       std::size_t steps)
        : t0_(t0), dt_((t1 - t0) / static_cast<double>(steps)), cum_(steps + 1, 0.0) {
        for (std::size_t k = 0; k < steps; ++k) {
            const double a = t0_ + k * dt_, b = a + dt_;
            cum_[k + 1] = cum_[k] + dt_ / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
        }
    }

    double at(double t) const {
        const double pos = (t - t0_) / dt_;
        if (pos <= 0.0) return cum_.front();
        if (pos >= static_cast<double>(cum_.size() - 1)) return cum_.back();
        const auto lo = static_cast<std::size_t>(pos);
        const double w = pos - static_cast<double>(lo);
        return cum_[lo] * (1.0 - w) + cum_[lo + 1] * w;
    }

  private:
    double t0_, dt_;
    std::vector<double> cum_;
};

} // namespace testutil
