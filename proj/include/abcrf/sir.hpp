#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace abcrf {

struct SirParams {
    double beta = 0.0;  // transmission rate, per day
    double gamma = 0.0; // recovery rate, per day

    void validate() const {
        if (!(beta >= 0.0) || !std::isfinite(beta))
            throw std::invalid_argument("SirParams: beta must be >= 0");
        if (!(gamma >= 0.0) || !std::isfinite(gamma))
            throw std::invalid_argument("SirParams: gamma must be >= 0");
    }
};

struct SirInit {
    double n = 0.0;  // total population
    double i0 = 0.0; // initially infected

    void validate() const {
        if (!(i0 > 0.0) || !(i0 <= n))
            throw std::invalid_argument("SirInit: need 0 < i0 <= n");
    }
};

struct SirTrajectory {
    std::vector<double> times;
    std::vector<double> s, i, r;
};

/// Integrates dS/dt = -beta*S*I/N, dI/dt = beta*S*I/N - gamma*I,
/// dR/dt = gamma*I with classical fixed-step RK4 and returns compartment
/// values at each observation time. Observation times must lie on the
/// integration grid (the default step of 0.01 day puts any multiple of
/// 0.01 on it); values are read off the grid point, never interpolated.
inline SirTrajectory simulate_sir(const SirParams& params, const SirInit& init,
                                  std::span<const double> obs_times, double horizon,
                                  double step = 0.01) {
    params.validate();
    init.validate();
    if (obs_times.empty()) throw std::invalid_argument("simulate_sir: no observation times");
    if (!(step > 0.0)) throw std::invalid_argument("simulate_sir: step must be > 0");
    if (!(horizon > 0.0)) throw std::invalid_argument("simulate_sir: horizon must be > 0");

    const long n_steps = static_cast<long>(std::llround(horizon / step));
    std::vector<long> obs_steps(obs_times.size());
    for (std::size_t k = 0; k < obs_times.size(); ++k) {
        const double t = obs_times[k];
        if (!(t >= 0.0) || t > horizon)
            throw std::invalid_argument("simulate_sir: observation time outside [0, horizon]");
        if (k > 0 && t < obs_times[k - 1])
            throw std::invalid_argument("simulate_sir: observation times must be sorted");
        const long ks = std::llround(t / step);
        if (std::abs(static_cast<double>(ks) * step - t) > 1e-9)
            throw std::invalid_argument("simulate_sir: observation time not on integration grid");
        obs_steps[k] = ks;
    }

    const double n = init.n;
    double s = init.n - init.i0, i = init.i0, r = 0.0;

    auto deriv = [&](double sv, double iv, double& ds, double& di, double& dr) {
        const double flow = params.beta * sv * iv / n;
        ds = -flow;
        di = flow - params.gamma * iv;
        dr = params.gamma * iv;
    };

    SirTrajectory traj;
    traj.times.reserve(obs_times.size());
    traj.s.reserve(obs_times.size());
    traj.i.reserve(obs_times.size());
    traj.r.reserve(obs_times.size());

    std::size_t next_obs = 0;
    auto record = [&](long at_step) {
        while (next_obs < obs_steps.size() && obs_steps[next_obs] == at_step) {
            traj.times.push_back(obs_times[next_obs]);
            traj.s.push_back(s);
            traj.i.push_back(i);
            traj.r.push_back(r);
            ++next_obs;
        }
    };

    record(0);
    double k1s, k1i, k1r, k2s, k2i, k2r, k3s, k3i, k3r, k4s, k4i, k4r;
    for (long kstep = 1; kstep <= n_steps; ++kstep) {
        deriv(s, i, k1s, k1i, k1r);
        deriv(s + 0.5 * step * k1s, i + 0.5 * step * k1i, k2s, k2i, k2r);
        deriv(s + 0.5 * step * k2s, i + 0.5 * step * k2i, k3s, k3i, k3r);
        deriv(s + step * k3s, i + step * k3i, k4s, k4i, k4r);
        s += step / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
        i += step / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i);
        r += step / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
        record(kstep);
        if (next_obs == obs_steps.size()) break;
    }
    return traj;
}

} // namespace abcrf
