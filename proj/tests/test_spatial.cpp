#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "abcrf/spatial.hpp"
#include "helpers.hpp"

using abcrf::CellId;
using abcrf::dispersal_kernel;
using abcrf::infection_hazard;
using abcrf::Landscape;
using abcrf::local_prevalence;
using abcrf::OutbreakState;
using abcrf::simulate_outbreak;
using abcrf::SpatialParams;
using abcrf::uniform_landscape;

TEST_CASE("dispersal kernel values") {
    CHECK_THAT(dispersal_kernel(0.5, 0.0),
               Catch::Matchers::WithinRel(1.0 / std::numbers::pi, 1e-14));
    CHECK_THAT(dispersal_kernel(0.5, 0.5),
               Catch::Matchers::WithinRel(std::exp(-1.0) / std::numbers::pi, 1e-14));
    CHECK(dispersal_kernel(1.0, 800.0) < 1e-300);

    double prev = dispersal_kernel(0.7, 0.0);
    for (double d = 0.1; d < 5.0; d += 0.1) {
        const double k = dispersal_kernel(0.7, d);
        CHECK(k > 0.0);
        CHECK(k < prev);
        prev = k;
    }
    CHECK_THROWS_AS(dispersal_kernel(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(dispersal_kernel(-1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(dispersal_kernel(1.0, -0.5), std::invalid_argument);
}

TEST_CASE("within-cell prevalence starts at p0 and grows towards 1") {
    const SpatialParams p{1e-4, 8.0, 0.5, 13.2, 0.004};
    CHECK_THAT(local_prevalence(p, 2.0, 2.0), Catch::Matchers::WithinRel(0.004, 1e-12));

    const SpatialParams half{1e-4, 8.0, 0.5, 3.0, 0.5};
    CHECK(local_prevalence(half, 1.0, 1.0) == 0.5);

    // independent high-precision evaluation of the half-year value
    const long double expected =
        1.0L / (1.0L + (1.0L / 0.004L - 1.0L) * std::exp(-13.2L * 0.5L));
    CHECK_THAT(local_prevalence(p, 0.5, 0.0),
               Catch::Matchers::WithinRel(static_cast<double>(expected), 1e-12));
    CHECK_THAT(local_prevalence(p, 0.5, 0.0), Catch::Matchers::WithinAbs(0.7470, 5e-5));

    double prev = 0.0;
    for (double t = 0.0; t < 1.0; t += 0.05) {
        const double rho = local_prevalence(p, t, 0.0);
        CHECK(rho > prev);
        CHECK(rho < 1.0);
        prev = rho;
    }
    CHECK_THROWS_AS(local_prevalence(p, 1.0, 2.0), std::invalid_argument);
}

TEST_CASE("hazard of a susceptible cell") {
    const auto land = uniform_landscape(5, 5, 0.75, 1.0);

    SECTION("no infectious pressure leaves only primary transmission") {
        const SpatialParams p{1e-4, 0.0, 0.5, 13.2, 0.004};
        OutbreakState state(land, {0, 0}, 10.0);
        CHECK_THAT(infection_hazard({3, 3}, 1.0, state, p, land),
                   Catch::Matchers::WithinRel(0.75 * 1e-4, 1e-14));
    }

    SECTION("zero host density shields a cell completely") {
        std::vector<double> h(25, 0.75);
        h[2 * 5 + 2] = 0.0;
        const Landscape patchy(5, 5, 1.0, h);
        const SpatialParams p{1e-2, 8.0, 0.5, 13.2, 0.004};
        OutbreakState state(patchy, {0, 0}, 10.0);
        CHECK(infection_hazard({2, 2}, 1.0, state, p, patchy) == 0.0);
    }

    SECTION("single infected neighbour at unit distance, half prevalence") {
        // p0 = 0.5 puts the neighbour's prevalence at exactly 0.5 when
        // queried at its own infection time
        const SpatialParams p{0.0, 8.0, 0.5, 13.2, 0.5};
        OutbreakState state(land, {0, 0}, 10.0);
        const long double expected =
            2.25L * std::exp(-2.0L) / (2.0L * std::numbers::pi_v<long double> * 0.5L);
        CHECK_THAT(infection_hazard({0, 1}, 0.0, state, p, land),
                   Catch::Matchers::WithinRel(static_cast<double>(expected), 1e-12));
        CHECK_THAT(infection_hazard({0, 1}, 0.0, state, p, land),
                   Catch::Matchers::WithinAbs(0.09692, 1e-5));
    }

    SECTION("hazard is non-decreasing in t while the infected set is fixed") {
        const SpatialParams p{1e-3, 4.0, 1.0, 5.0, 0.01};
        OutbreakState state(land, {2, 2}, 10.0);
        state.add_infection({1, 2}, 0.25);
        double prev = 0.0;
        for (double t = 0.3; t <= 3.0; t += 0.1) {
            const double lambda = infection_hazard({4, 4}, t, state, p, land);
            CHECK(lambda >= prev);
            prev = lambda;
        }
    }

    SECTION("querying an infected cell is an error") {
        const SpatialParams p{1e-3, 4.0, 1.0, 5.0, 0.01};
        OutbreakState state(land, {2, 2}, 10.0);
        CHECK_THROWS_AS(infection_hazard({2, 2}, 1.0, state, p, land), std::invalid_argument);
    }
}

TEST_CASE("outbreak state enforces its event invariants") {
    const auto land = uniform_landscape(4, 4, 1.0, 1.0);
    OutbreakState state(land, {1, 1}, 5.0);
    CHECK(state.infection_time({1, 1}) == 0.0);
    CHECK(state.n_infected_by(0.0) == 1);

    state.add_infection({0, 0}, 1.0);
    CHECK_THROWS_AS(state.add_infection({0, 0}, 2.0), std::invalid_argument); // twice
    CHECK_THROWS_AS(state.add_infection({0, 1}, 0.5), std::invalid_argument); // out of order
    CHECK_THROWS_AS(state.add_infection({0, 1}, 6.0), std::invalid_argument); // past horizon
    CHECK_THROWS_AS(state.add_infection({7, 0}, 2.0), std::invalid_argument); // out of bounds
    CHECK(state.n_infected_by(0.9) == 1);
    CHECK(state.n_infected_by(1.0) == 2);
}

TEST_CASE("no transmission means the outbreak never leaves the origin") {
    const auto land = uniform_landscape(10, 10, 1.0, 1.0);
    const SpatialParams p{0.0, 0.0, 0.5, 13.2, 0.004};
    const auto state = simulate_outbreak(p, land, {5, 5}, 100.0, 42);
    CHECK(state.events().size() == 1);
    CHECK(state.events()[0].cell == CellId{5, 5});
}

TEST_CASE("constant-hazard first infection time is exponential") {
    // beta = 0, h = 1: every susceptible cell carries hazard epsilon, so the
    // first new infection is Exponential(epsilon * M) with M = 399.
    const auto land = uniform_landscape(20, 20, 1.0, 1.0);
    const SpatialParams p{0.1, 0.0, 0.5, 13.2, 0.004};
    const double rate = 0.1 * 399;
    const int n_runs = 1000;
    double sum = 0.0;
    for (int run = 0; run < n_runs; ++run) {
        const auto state = simulate_outbreak(p, land, {10, 10}, 0.5, 1000 + run);
        REQUIRE(state.events().size() >= 2);
        sum += state.events()[1].time;
    }
    const double mean = sum / n_runs;
    const double se = (1.0 / rate) / std::sqrt(static_cast<double>(n_runs));
    CHECK(std::abs(mean - 1.0 / rate) < 3.0 * se);
}

TEST_CASE("thinning reproduces the exact first-infection distribution") {
    // One susceptible cell next to the origin, no primary transmission: the
    // infection time has survival exp(-int lambda), integrable by quadrature.
    const auto land = uniform_landscape(1, 2, 0.75, 1.0);
    const SpatialParams p{0.0, 20.0, 0.5, 13.2, 0.004};
    const double horizon = 40.0;

    const double coupling = 0.75 * 20.0 * 0.75 * dispersal_kernel(0.5, 1.0);
    const testutil::CumulativeIntegral cumulative(
        [&](double t) { return coupling * local_prevalence(p, t, 0.0); }, 0.0, horizon, 40000);

    std::vector<double> times;
    const int n_runs = 10000;
    for (int run = 0; run < n_runs; ++run) {
        const auto state = simulate_outbreak(p, land, {0, 0}, horizon, 50000 + run);
        if (state.events().size() == 2) times.push_back(state.events()[1].time);
    }
    REQUIRE(times.size() == static_cast<std::size_t>(n_runs)); // censor prob ~ 4e-9

    const double d = testutil::ks_distance(
        times, [&](double t) { return 1.0 - std::exp(-cumulative.at(t)); });
    CHECK(d < 0.05);
}

TEST_CASE("with beta = 0 the scaled inter-infection intervals are unit exponential") {
    const auto land = uniform_landscape(20, 20, 1.0, 1.0);
    const SpatialParams p{0.1, 0.0, 0.5, 13.2, 0.004};
    std::vector<double> scaled;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto state = simulate_outbreak(p, land, {10, 10}, 100.0, 900 + seed);
        const auto& events = state.events();
        for (std::size_t k = 1; k < events.size(); ++k) {
            const double rate = 0.1 * static_cast<double>(400 - k);
            scaled.push_back((events[k].time - events[k - 1].time) * rate);
        }
    }
    REQUIRE(scaled.size() >= 1000);
    const double d =
        testutil::ks_distance(scaled, [](double u) { return 1.0 - std::exp(-u); });
    CHECK(d < testutil::ks_critical(scaled.size(), 0.01));
}

TEST_CASE("events are chronological and never repeat a cell") {
    const auto land = uniform_landscape(15, 15, 0.9, 1.0);
    const SpatialParams p{1e-2, 6.0, 0.8, 13.2, 0.01};
    const auto state = simulate_outbreak(p, land, {7, 7}, 3.0, 99);
    REQUIRE(state.events().size() > 10);
    std::vector<std::pair<int, int>> seen;
    for (std::size_t k = 0; k < state.events().size(); ++k) {
        if (k > 0) CHECK(state.events()[k].time >= state.events()[k - 1].time);
        seen.emplace_back(state.events()[k].cell.row, state.events()[k].cell.col);
    }
    std::sort(seen.begin(), seen.end());
    CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}

TEST_CASE("identical seeds reproduce the outbreak exactly") {
    const auto land = uniform_landscape(12, 12, 0.75, 1.0);
    const SpatialParams p{1e-3, 8.0, 0.5, 13.2, 0.004};
    const auto a = simulate_outbreak(p, land, {6, 6}, 4.0, 1234);
    const auto b = simulate_outbreak(p, land, {6, 6}, 4.0, 1234);
    REQUIRE(a.events().size() == b.events().size());
    for (std::size_t k = 0; k < a.events().size(); ++k) {
        CHECK(a.events()[k].time == b.events()[k].time);
        CHECK(a.events()[k].cell == b.events()[k].cell);
    }
}

TEST_CASE("reference configuration produces a moderate outbreak distribution") {
    // 100x100 grid, 0.75 occupancy, eps=1e-4, beta=8, alpha=0.5, centre
    // origin, four years. The count band was verified during development
    // against an independent fine-step discrete-time simulator; the check is
    // distributional (median over seeds), not pointwise.
    const auto land = uniform_landscape(100, 100, 0.75, 1.0);
    const SpatialParams p{1e-4, 8.0, 0.5, 13.2, 0.004};
    std::vector<std::size_t> counts;
    for (std::uint64_t seed = 0; seed < 10; ++seed)
        counts.push_back(simulate_outbreak(p, land, {50, 50}, 4.0, seed).events().size());
    std::sort(counts.begin(), counts.end());
    const std::size_t median = counts[counts.size() / 2];
    CHECK(median >= 10);
    CHECK(median <= 3200);
    CHECK(counts.front() >= 1);
}

TEST_CASE("simulation rejects impossible setups") {
    const auto land = uniform_landscape(4, 4, 0.0, 1.0);
    const SpatialParams p{1e-3, 8.0, 0.5, 13.2, 0.004};
    CHECK_THROWS_WITH(simulate_outbreak(p, land, {1, 1}, 2.0, 1),
                      Catch::Matchers::ContainsSubstring("zero host density"));
    const auto ok = uniform_landscape(4, 4, 0.5, 1.0);
    CHECK_THROWS_AS(simulate_outbreak(p, ok, {1, 1}, 0.0, 1), std::invalid_argument);
    SpatialParams bad = p;
    bad.alpha = 0.0;
    CHECK_THROWS_AS(simulate_outbreak(bad, ok, {1, 1}, 2.0, 1), std::invalid_argument);
    bad = p;
    bad.p0 = 1.0;
    CHECK_THROWS_AS(simulate_outbreak(bad, ok, {1, 1}, 2.0, 1), std::invalid_argument);
}
