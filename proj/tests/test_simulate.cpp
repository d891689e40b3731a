#include <doctest.h>

#include <cmath>

#include "cirld/simulate.hpp"
#include "test_models.hpp"

using namespace cirld;

TEST_CASE("same seed gives a bit-identical trajectory") {
    const ModelSpec s = fixtures::two_regime();
    const Trajectory a = simulate_path(s, 100, 1.0, 1e-2, 1.0, 1, 42);
    const Trajectory b = simulate_path(s, 100, 1.0, 1e-2, 1.0, 1, 42);
    CHECK(a.x == b.x);
    CHECK(a.regime == b.regime);
    const Trajectory c = simulate_path(s, 100, 1.0, 1e-2, 1.0, 1, 43);
    CHECK(a.x != c.x);
}

TEST_CASE("simulate rejects bad inputs") {
    const ModelSpec s = fixtures::two_regime();
    CHECK_THROWS_AS(simulate_path(s, 100, 1.0, 1e-2, -1.0, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(simulate_path(s, 100, 1.0, 1e-2, 1.0, 3, 0), std::invalid_argument);
    ModelSpec bad = s;
    bad.theta = 3.0;  // Feller fails
    CHECK_THROWS_AS(simulate_path(bad, 100, 1.0, 1e-2, 1.0, 1, 0), std::invalid_argument);
}

TEST_CASE("substep refinement keeps the per-step switching mass small") {
    const ModelSpec s = fixtures::two_regime();  // sup q_i = 2
    const Trajectory t = simulate_path(s, 1000, 0.1, 1e-2, 1.0, 1, 7);
    CHECK(t.dt_effective <= 0.1 / (1000.0 * 2.0) + 1e-15);
    CHECK(t.dt == doctest::Approx(1e-2));
}

TEST_CASE("large n tracks the single-regime mean-reversion ODE") {
    // x' = mu - x from x0 = 1: x(t) = 2 - exp(-t).
    const ModelSpec s = fixtures::single_regime(1.0, 1.0, 2.0);
    SimOptions opts;
    opts.h_cap = 1e-4;
    const EnsembleSummary ens = mc_ensemble(s, 1000000, 1.0, 0.1, 1.0, 1, 1000, 2024, false, opts);
    for (std::size_t k = 1; k < ens.times.size(); ++k) {
        const double exact = 2.0 - std::exp(-ens.times[k]);
        const double se = std::sqrt(ens.var_x[k] / ens.n_paths);
        CHECK(std::fabs(ens.mean_x[k] - exact) <= 4.0 * se);
    }
}

TEST_CASE("occupation fractions") {
    Trajectory t;
    t.times = {0.0, 1.0, 2.0, 3.0, 4.0};
    t.x = {1.0, 1.0, 1.0, 1.0, 1.0};
    t.regime = {1, 2, 1, 2, 2};
    const OccupationMeasure occ = occupation(t, 0.0, 4.0);
    CHECK(occ.weights.probs[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(occ.weights.probs[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(occupation(t, 2.0, 3.0), std::invalid_argument);

    // A regime the path never visits still gets a (zero) slot.
    t.n_regimes = 3;
    CHECK(occupation(t, 0.0, 4.0).weights.probs.size() == 3);
    CHECK(occupation(t, 0.0, 4.0).weights.probs[2] == 0.0);

    const ModelSpec one = fixtures::single_regime(1.0, 1.0, 1.0);
    const Trajectory u = simulate_path(one, 100, 1.0, 1e-2, 1.0, 1, 5);
    CHECK(occupation(u, 0.0, 1.0).weights.probs[0] == doctest::Approx(1.0));
}

TEST_CASE("fast-chain occupation approaches the stationary law") {
    // Constant q12 = 1, q21 = 2: stationary (2/3, 1/3).
    ModelSpec s = fixtures::two_regime();
    s.q_field.base = fixtures::mat2(1.0, 2.0);
    s.q_field.slope = fixtures::mat2(0.0, 0.0);
    const Trajectory t = simulate_path(s, 1000, 10.0, 1e-2, 1.0, 1, 99);
    const OccupationMeasure occ = occupation(t, 0.0, 10.0);
    CHECK(std::fabs(occ.weights.probs[0] - 2.0 / 3.0) < 0.02);
    CHECK(std::fabs(occ.weights.probs[1] - 1.0 / 3.0) < 0.02);
}

TEST_CASE("regime transition frequencies match n*q*dt") {
    ModelSpec s = fixtures::two_regime();
    s.q_field.base = fixtures::mat2(1.0, 2.0);
    s.q_field.slope = fixtures::mat2(0.0, 0.0);
    const long long n = 10;
    const double dt = 1e-3;
    const Trajectory t = simulate_path(s, n, 100.0, dt, 1.0, 1, 314159);
    REQUIRE(t.dt_effective == doctest::Approx(dt));  // no substepping at these rates

    long long from[2] = {0, 0};
    long long jump[2] = {0, 0};
    for (std::size_t k = 0; k + 1 < t.regime.size(); ++k) {
        const int i = t.regime[k] - 1;
        ++from[i];
        if (t.regime[k + 1] != t.regime[k]) ++jump[i];
    }
    for (int i = 0; i < 2; ++i) {
        const double p = static_cast<double>(n) * s.q_field.base(i, 1 - i) * dt;
        const double phat = static_cast<double>(jump[i]) / from[i];
        const double sigma = std::sqrt(p * (1.0 - p) / from[i]);
        CHECK(std::fabs(phat - p) <= 3.0 * sigma);
    }
}

TEST_CASE("paths stay nonnegative and clamping is rare") {
    const ModelSpec s = fixtures::two_regime();
    const EnsembleSummary ens = mc_ensemble(s, 100, 1.0, 1e-2, 1.0, 1, 64, 17, true);
    for (const Trajectory& t : ens.paths)
        for (double v : t.x) CHECK(v >= 0.0);
    CHECK(ens.clamped_fraction < 0.01);
}

TEST_CASE("single-path ensemble equals simulate_path") {
    const ModelSpec s = fixtures::two_regime();
    const Trajectory t = simulate_path(s, 200, 1.0, 1e-2, 1.0, 2, 8);
    const EnsembleSummary ens = mc_ensemble(s, 200, 1.0, 1e-2, 1.0, 2, 1, 8, true);
    CHECK(ens.paths[0].x == t.x);
    CHECK(ens.paths[0].regime == t.regime);
    CHECK(ens.mean_x == t.x);
}
