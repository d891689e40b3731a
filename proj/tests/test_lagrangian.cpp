#include <doctest.h>

#include <cmath>
#include <random>

#include "cirld/averaging.hpp"
#include "cirld/lagrangian.hpp"
#include "cirld/spectral.hpp"
#include "test_models.hpp"

using namespace cirld;

namespace {

// Single-regime conjugate of a*p + b*p^2/2: (v - a)^2 / (2b).
double closed_form_L(const ModelSpec& s, double x, double v) {
    const double a = s.eta * (s.mu[0] - x);
    const double b = s.theta * s.theta * x;
    return (v - a) * (v - a) / (2.0 * b);
}

}  // namespace

TEST_CASE("quadratic single-regime Legendre transform") {
    const ModelSpec s = fixtures::single_regime(1.0, 1.0, 1.0);
    const LegendreEval le = legendre(s, 1.0, 1.0);  // H = p^2/2, so L(1,1) = 1/2
    CHECK(le.converged);
    CHECK(le.value == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(le.p_star == doctest::Approx(1.0).epsilon(1e-7));

    std::mt19937 gen(23);
    std::uniform_real_distribution<double> ux(0.1, 5.0), uv(-4.0, 4.0);
    const ModelSpec g = fixtures::single_regime(1.4, 0.8, 2.3);
    for (int trial = 0; trial < 20; ++trial) {
        const double x = ux(gen), v = uv(gen);
        const LegendreEval e = legendre(g, x, v);
        CHECK(std::fabs(e.value - closed_form_L(g, x, v)) <= 1e-8);
    }
}

TEST_CASE("zero cost exactly at the averaged velocity") {
    const ModelSpec s = fixtures::two_regime();
    for (double x : {0.4, 1.0, 2.7}) {
        const double vbar = averaged_drift(s, x);
        const LegendreEval le = legendre(s, x, vbar);
        CHECK(le.value <= 1e-10);
        CHECK(le.value >= -1e-12);
        CHECK(std::fabs(le.p_star) <= 1e-6);
    }
}

TEST_CASE("the maximizer satisfies the stationarity condition") {
    const ModelSpec s = fixtures::three_regime();
    std::mt19937 gen(41);
    std::uniform_real_distribution<double> ux(0.3, 4.0), uv(-3.0, 3.0);
    for (int trial = 0; trial < 10; ++trial) {
        const double x = ux(gen), v = uv(gen);
        const LegendreEval le = legendre(s, x, v);
        REQUIRE(le.converged);
        CHECK(std::fabs(hamiltonian_gradient(s, x, le.p_star).dHdp - v) <= 1e-8);
    }
}

TEST_CASE("warm-started solve agrees with the cold solve") {
    const ModelSpec s = fixtures::two_regime();
    const LegendreEval cold = legendre(s, 1.2, 0.8);
    const LegendreEval warm = legendre(s, 1.2, 0.8, cold.p_star + 0.3);
    CHECK(warm.converged);
    CHECK(std::fabs(warm.value - cold.value) <= 1e-9);
}

TEST_CASE("velocities needing |p| beyond the bracket are unreachable") {
    // At x = x_min the diffusion is nearly degenerate; a large velocity needs
    // p beyond the expansion limit.
    ModelSpec s = fixtures::single_regime(1.0, 1.0, 1.0);
    const LegendreEval le = legendre(s, 1e-6, 50.0);
    CHECK(le.unreachable);
    CHECK(std::isinf(le.value));
}

TEST_CASE("Lagrangian is nonnegative and midpoint convex in v") {
    const ModelSpec s = fixtures::two_regime();
    std::mt19937 gen(31);
    std::uniform_real_distribution<double> ux(0.3, 4.0), uv(-3.0, 3.0);
    for (int trial = 0; trial < 25; ++trial) {
        const double x = ux(gen), v1 = uv(gen), v2 = uv(gen);
        const double L1 = legendre(s, x, v1).value;
        const double L2 = legendre(s, x, v2).value;
        const double Lm = legendre(s, x, 0.5 * (v1 + v2)).value;
        CHECK(L1 >= -1e-12);
        CHECK(L2 >= -1e-12);
        CHECK(Lm <= 0.5 * L1 + 0.5 * L2 + 1e-8);
    }
}

TEST_CASE("superlinear growth in v") {
    const ModelSpec s = fixtures::two_regime();
    for (double x : {0.5, 2.0}) {
        double prev = 0.0;
        for (double v : {10.0, 100.0, 1000.0}) {
            const double ratio = legendre(s, x, v).value / v;
            CHECK(ratio > prev);
            prev = ratio;
        }
        prev = 0.0;
        for (double v : {10.0, 100.0, 1000.0}) {
            const double ratio = legendre(s, x, -v).value / v;
            CHECK(ratio > prev);
            prev = ratio;
        }
    }
}

TEST_CASE("duality round trip recovers the Hamiltonian") {
    const ModelSpec s1 = fixtures::single_regime(1.0, 1.0, 1.0);
    CHECK(std::fabs(duality_roundtrip(s1, 1.0, 1.0) - 0.5) <= 1e-6);

    const ModelSpec s = fixtures::two_regime();
    for (double x : {0.5, 1.5}) {
        CHECK(std::fabs(duality_roundtrip(s, x, 0.0)) <= 1e-6);
        for (double p : {-1.2, 0.7}) {
            const double h = hamiltonian(s, x, p).value;
            CHECK(std::fabs(duality_roundtrip(s, x, p) - h) <= 1e-6);
        }
    }

    const double rt = duality_roundtrip(fixtures::mu02_symmetric(), 1.0, 1.0);
    CHECK(std::fabs(rt - 0.91421356237309515) <= 1e-6);
}
