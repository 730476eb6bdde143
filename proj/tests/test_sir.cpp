#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "abcrf/sir.hpp"

using abcrf::simulate_sir;
using abcrf::SirInit;
using abcrf::SirParams;

namespace {

// Independent oracle: explicit Euler at a very fine step.
std::vector<double> euler_infected(const SirParams& p, const SirInit& init,
                                   const std::vector<double>& obs_times, double horizon,
                                   double step) {
    double s = init.n - init.i0, i = init.i0;
    std::vector<double> out;
    std::size_t next = 0;
    const long n_steps = std::lround(horizon / step);
    for (long k = 0; k <= n_steps; ++k) {
        const double t = k * step;
        while (next < obs_times.size() && t >= obs_times[next] - step / 2) {
            out.push_back(i);
            ++next;
        }
        if (next == obs_times.size()) break;
        const double flow = p.beta * s * i / init.n;
        s += step * -flow;
        i += step * (flow - p.gamma * i);
    }
    return out;
}

const std::vector<double> kCase1Times = {1, 5, 9, 13, 17};

} // namespace

TEST_CASE("beta = 0 decays exponentially") {
    const auto traj = simulate_sir({0.0, 0.5}, {1000, 1}, std::vector<double>{2.0}, 4.0);
    REQUIRE(traj.i.size() == 1);
    CHECK_THAT(traj.i[0], Catch::Matchers::WithinAbs(std::exp(-1.0), 1e-7));
}

TEST_CASE("gamma = 0 follows the exact logistic") {
    const std::vector<double> times = {1, 4, 8, 12};
    const auto traj = simulate_sir({1.5, 0.0}, {1000, 1}, times, 20.0);
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double expected = 1000.0 / (1.0 + 999.0 * std::exp(-1.5 * times[k]));
        CHECK_THAT(traj.i[k], Catch::Matchers::WithinRel(expected, 1e-7));
    }
}

TEST_CASE("RK4 matches the fine-step Euler oracle at the reference observation times") {
    const SirParams p{1.5, 0.5};
    const SirInit init{1000, 1};
    const auto oracle = euler_infected(p, init, kCase1Times, 20.0, 1e-5);
    const auto traj = simulate_sir(p, init, kCase1Times, 20.0);
    REQUIRE(traj.i.size() == oracle.size());
    for (std::size_t k = 0; k < oracle.size(); ++k)
        CHECK_THAT(traj.i[k], Catch::Matchers::WithinAbs(oracle[k], 0.1));
}

TEST_CASE("compartments conserve the population and stay monotone") {
    std::vector<double> grid;
    for (int k = 0; k <= 2000; ++k) grid.push_back(k * 0.01);
    const auto traj = simulate_sir({1.5, 0.5}, {1000, 1}, grid, 20.0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        CHECK(std::abs(traj.s[k] + traj.i[k] + traj.r[k] - 1000.0) <= 1e-6 * 1000.0);
        CHECK(traj.s[k] >= -1e-9);
        CHECK(traj.i[k] >= -1e-9);
        CHECK(traj.r[k] >= -1e-9);
        if (k > 0) {
            CHECK(traj.s[k] <= traj.s[k - 1] + 1e-12);
            CHECK(traj.r[k] >= traj.r[k - 1] - 1e-12);
        }
    }
}

TEST_CASE("halving the step barely moves the solution") {
    const auto coarse = simulate_sir({1.5, 0.5}, {1000, 1}, kCase1Times, 20.0, 0.01);
    const auto fine = simulate_sir({1.5, 0.5}, {1000, 1}, kCase1Times, 20.0, 0.005);
    for (std::size_t k = 0; k < kCase1Times.size(); ++k)
        CHECK(std::abs(coarse.i[k] - fine.i[k]) < 1e-3);
}

TEST_CASE("identical inputs give bit-identical trajectories") {
    const auto a = simulate_sir({1.5, 0.5}, {1000, 1}, kCase1Times, 20.0);
    const auto b = simulate_sir({1.5, 0.5}, {1000, 1}, kCase1Times, 20.0);
    CHECK(a.i == b.i);
    CHECK(a.s == b.s);
    CHECK(a.r == b.r);
}

TEST_CASE("invalid inputs are rejected") {
    const std::vector<double> t{1.0};
    CHECK_THROWS_AS(simulate_sir({-0.1, 0.5}, {1000, 1}, t, 20.0), std::invalid_argument);
    CHECK_THROWS_AS(simulate_sir({1.5, -0.5}, {1000, 1}, t, 20.0), std::invalid_argument);
    CHECK_THROWS_AS(simulate_sir({1.5, 0.5}, {1000, 0}, t, 20.0), std::invalid_argument);
    CHECK_THROWS_AS(simulate_sir({1.5, 0.5}, {1000, 1}, std::vector<double>{}, 20.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(simulate_sir({1.5, 0.5}, {1000, 1}, std::vector<double>{25.0}, 20.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(simulate_sir({1.5, 0.5}, {1000, 1}, std::vector<double>{5.0, 1.0}, 20.0),
                    std::invalid_argument);
}
