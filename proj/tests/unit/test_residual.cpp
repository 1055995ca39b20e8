#include "cmflow/convex_calculus.hpp"
#include "cmflow/oracles.hpp"
#include "cmflow/psi.hpp"
#include "cmflow/residual.hpp"

#include <doctest.h>

#include <cmath>

using namespace cmflow;

TEST_CASE("stationary sphere has zero residual") {
    const GridPtr g = SphereGrid::full_s2(32, 64);
    const auto psi = eval_psi(PsiSpec::constant(), g);
    for (double alpha : {0.5, 1.0, 2.0}) {
        const auto r = stationarity_residual(SupportField(g, stationary_radius(2, 1)), psi, 1, alpha);
        CHECK(r.rho_hat_relspread < 1e-12);
        CHECK(r.sup_residual < 1e-12);
        CHECK(r.p == doctest::Approx(1 + 1 / alpha));
        // u^{1-p} sigma_1 with u = 2^{-1/2}: 2 u^{2-p}
        CHECK(r.c_lp == doctest::Approx(2 * std::pow(stationary_radius(2, 1), 2 - r.p)).epsilon(1e-12));
    }
    const GridPtr a = SphereGrid::axisym(3, 64);
    const auto r = stationarity_residual(SupportField(a, 0.8), eval_psi(PsiSpec::constant(), a), 2, 1.0);
    CHECK(r.sup_residual < 1e-12);
    // any sphere is stationary up to scale: rho_hat = 3 r^2 / r
    CHECK(r.rho_hat_mean == doctest::Approx(3 * 0.8).epsilon(1e-12));
}

TEST_CASE("non-stationary body has a visible residual") {
    const GridPtr g = SphereGrid::full_s2(32, 64);
    const auto u = sample(g, [](double t, double) { return 1 + 0.05 * (1.5 * std::cos(t) * std::cos(t) - 0.5); });
    const auto r = stationarity_residual(u, eval_psi(PsiSpec::constant(), g), 1, 1.0);
    CHECK(r.sup_residual > 1e-2);
    CHECK(r.rho_hat_relspread > 1e-2);
}

TEST_CASE("p and c relation") {
    for (int k = 1; k <= 4; ++k)
        for (double alpha : {0.3, 1.0, 2.5}) {
            const auto pc = cross_check_pc_relation(alpha, k);
            CHECK(pc.p == doctest::Approx(1 + 1 / alpha));
            CHECK(pc.exponent_psi == doctest::Approx(1 / (1 + k * alpha)));
            CHECK(pc.exponent_via_tilde == doctest::Approx(pc.exponent_psi).epsilon(1e-14));
            CHECK(pc.p_in_window == (pc.p < k + 1));
        }
    CHECK_THROWS_AS(cross_check_pc_relation(0.0, 1), std::invalid_argument);
}

TEST_CASE("residual rejects degenerate input") {
    const GridPtr g = SphereGrid::full_s2(16, 32);
    const auto psi = eval_psi(PsiSpec::constant(), g);
    CHECK_THROWS_AS(stationarity_residual(SupportField(g, -1.0), psi, 1, 1.0), std::domain_error);
    const auto bad = sample(g, [](double t, double) { return 1 + 0.6 * (1.5 * std::cos(t) * std::cos(t) - 0.5); });
    CHECK_THROWS_AS(stationarity_residual(bad, psi, 2, 1.0), std::domain_error);
}
