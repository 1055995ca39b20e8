#include "cmflow/convex_calculus.hpp"
#include "cmflow/flow.hpp"
#include "cmflow/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace cmflow;
using std::numbers::pi;

namespace {

RadiiSpectrum pair_spectrum(GridVariant v, int n, double l1, double l2) {
    RadiiSpectrum s;
    s.variant = v;
    s.n_dim = n;
    s.lambda_1 = {l1};
    s.lambda_2 = {l2};
    return s;
}

SupportField linear(const GridPtr& g, double a, double b, double c) {
    std::vector<double> v(g->size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto x = g->direction(i);
        v[i] = a * x[0] + b * x[1] + c * x[2];
    }
    return SupportField(g, std::move(v));
}

SupportField plus(const SupportField& a, const SupportField& b, double s = 1.0) {
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] + s * b[i];
    return SupportField(a.grid_ptr(), std::move(v));
}

}  // namespace

TEST_CASE("binomial and elementary symmetric polynomials") {
    CHECK(binomial(5, 2) == 10.0);
    CHECK(binomial(3, 0) == 1.0);
    CHECK(binomial(3, 4) == 0.0);
    const std::vector<double> l = {1.0, 2.0, 3.0, 4.0};
    CHECK(elementary_symmetric(l, 0) == 1.0);
    CHECK(elementary_symmetric(l, 1) == 10.0);
    CHECK(elementary_symmetric(l, 2) == 35.0);
    CHECK(elementary_symmetric(l, 4) == 24.0);
    CHECK(elementary_symmetric(l, 5) == 0.0);
}

TEST_CASE("sigma_k examples") {
    CHECK(sigma_k(pair_spectrum(GridVariant::FullS2, 2, 1, 1), 1)[0] == 2.0);
    CHECK(sigma_k(pair_spectrum(GridVariant::FullS2, 2, 2, 3), 2)[0] == 6.0);
    const double r = 0.7;
    CHECK(sigma_k(pair_spectrum(GridVariant::Axisym, 3, r, r), 2)[0] == doctest::Approx(3 * r * r));
    // sigma_k(r I) = C(n, k) r^k for every supported (n, k)
    for (int n = 2; n <= 8; ++n)
        for (int k = 1; k <= n; ++k)
            CHECK(sigma_k(pair_spectrum(GridVariant::Axisym, n, r, r), k)[0] == doctest::Approx(binomial(n, k) * std::pow(r, k)).epsilon(1e-14));
    // multiplicity-aware form agrees with the explicit eigenvalue list
    const auto s = pair_spectrum(GridVariant::Axisym, 5, 1.3, 0.4);
    for (int k = 1; k <= 5; ++k) CHECK(sigma_k(s, k)[0] == doctest::Approx(elementary_symmetric(s.eigenvalues(0), k)).epsilon(1e-14));
    CHECK_THROWS_AS(sigma_k(s, 0), std::invalid_argument);
    CHECK_THROWS_AS(sigma_k(s, 6), std::invalid_argument);
}

TEST_CASE("sigma_k gradient") {
    const std::vector<double> l = {2.0, 3.0};
    const auto g1 = sigma_k_gradient(l, 1);
    CHECK(g1[0] == 1.0);
    CHECK(g1[1] == 1.0);
    const auto g2 = sigma_k_gradient(l, 2);
    CHECK(g2[0] == 3.0);
    CHECK(g2[1] == 2.0);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(0.1, 4.0);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<double> x(3);
        for (double& v : x) v = d(rng);
        CHECK(sigma_gradient_fd_error(x, 2, 1e-5) < 1e-6);
    }
    // spectrum form matches the list form, multiplicities included
    const auto s = pair_spectrum(GridVariant::Axisym, 4, 1.5, 0.6);
    const auto sg = sigma_k_gradient(s, 3);
    const auto lg = sigma_k_gradient(s.eigenvalues(0), 3);
    for (int i = 0; i < 4; ++i) CHECK(sg.at(0)[static_cast<std::size_t>(i)] == doctest::Approx(lg[static_cast<std::size_t>(i)]));
}

TEST_CASE("radii spectrum and min radius") {
    const GridPtr g = SphereGrid::full_s2(32, 64);
    const auto one = radii_spectrum(SupportField(g, 1.0));
    for (std::size_t i = 0; i < g->size(); ++i) {
        CHECK(one.lambda_1[i] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(one.lambda_2[i] == doctest::Approx(1.0).epsilon(1e-12));
    }
    const auto z = radii_spectrum(sample(g, [](double t, double) { return std::cos(t); }));
    CHECK(std::abs(min_radius(z)) < 1e-6);
    CHECK(min_radius(sample(g, [](double t, double) { return 1 / std::sqrt(2.0) + 0.01 * std::cos(t) * std::cos(t); })) > 0.0);
    CHECK(min_radius(SupportField(g, 0.3)) == doctest::Approx(0.3).epsilon(1e-12));
    // the linear part is invisible to W
    CHECK(min_radius(sample(g, [](double t, double) { return 1 + 0.9 * std::cos(t); })) == doctest::Approx(1.0).epsilon(1e-6));
    // indefinite W reported as a negative number
    CHECK(min_radius(sample(g, [](double t, double) { return 1 + 0.6 * (1.5 * std::cos(t) * std::cos(t) - 0.5); })) < 0.0);
}

TEST_CASE("min radius matches a brute-force eigenvalue scan") {
    const GridPtr g = SphereGrid::full_s2(24, 48);
    const auto u = sample(g, [](double t, double p) { return 1 + 0.2 * std::sin(t) * std::sin(t) * std::cos(2 * p) + 0.1 * std::cos(t) * std::cos(t); });
    const auto h = covariant_hessian_s2(u);
    double scan = 1e300;
    for (std::size_t i = 0; i < g->size(); ++i) {
        // smallest eigenvalue by a fine angular scan of the quadratic form
        for (int j = 0; j < 720; ++j) {
            const double a = pi * j / 720;
            const double c = std::cos(a), s = std::sin(a);
            scan = std::min(scan, (h[i].a + u[i]) * c * c + 2 * h[i].b * c * s + (h[i].c + u[i]) * s * s);
        }
    }
    CHECK(min_radius(u) == doctest::Approx(scan).epsilon(1e-4));
    CHECK(min_radius(u) <= scan + 1e-12);
}

TEST_CASE("Garding cone membership") {
    const auto s = pair_spectrum(GridVariant::FullS2, 2, 3.0, -1.0);
    CHECK(in_garding_cone(s, 1));
    CHECK_FALSE(in_garding_cone(s, 2));
}

TEST_CASE("embedding") {
    const GridPtr g = SphereGrid::full_s2(32, 64);
    const auto sphere = embed(SupportField(g, 0.8));
    for (std::size_t i = 0; i < g->size(); ++i) {
        CHECK(sphere.rho[i] == doctest::Approx(0.8).epsilon(1e-12));
        const auto x = g->direction(i);
        for (int c = 0; c < 3; ++c) CHECK(sphere.at(i)[static_cast<std::size_t>(c)] == doctest::Approx(0.8 * x[static_cast<std::size_t>(c)]).epsilon(1e-12));
    }
    // u = <a, x> + r is the sphere of radius r centred at a
    const double a[3] = {0.1, -0.2, 0.3};
    const auto shifted = embed(plus(SupportField(g, 1.0), linear(g, a[0], a[1], a[2])));
    double err = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        double d2 = 0.0;
        for (std::size_t c = 0; c < 3; ++c) d2 += (shifted.at(i)[c] - a[c]) * (shifted.at(i)[c] - a[c]);
        err = std::max(err, std::abs(std::sqrt(d2) - 1.0));
    }
    CHECK(err < 1e-6);
    // rho^2 = u^2 + |grad u|^2
    const LegendreProfile f{1.0, 0.05, 2};
    const auto u = sample(g, [&](double t, double) { return f.value(t); });
    const auto body = embed(u);
    const auto grad = gradient(u);
    for (std::size_t i = 0; i < g->size(); ++i)
        CHECK(std::abs(body.rho[i] * body.rho[i] - (u[i] * u[i] + grad.g_theta[i] * grad.g_theta[i] + grad.g_phi[i] * grad.g_phi[i])) < 1e-10);
    CHECK_THROWS_AS(embed(sample(g, [](double t, double) { return 1 + 0.6 * (1.5 * std::cos(t) * std::cos(t) - 0.5); })), std::domain_error);
}

TEST_CASE("mixed volume examples") {
    const GridPtr g = SphereGrid::full_s2(32, 64);
    CHECK(mixed_volume_k1(SupportField(g, 1.0), 1) == doctest::Approx(8 * pi).epsilon(1e-12));
    CHECK(mixed_volume_k1(SupportField(g, 1 / std::sqrt(2.0)), 1) == doctest::Approx(4 * pi).epsilon(1e-12));
    const GridPtr a = SphereGrid::axisym(3, 64);
    const double r = 0.9;
    CHECK(mixed_volume_k1(SupportField(a, r), 2) == doctest::Approx(3 * r * r * r * 2 * pi * pi).epsilon(1e-12));
}

TEST_CASE("mixed volume homogeneity and translation invariance") {
    const GridPtr g = SphereGrid::full_s2(32, 64);
    const auto u = sample(g, [](double t, double p) { return 1 + 0.1 * std::cos(t) * std::cos(t) + 0.05 * std::sin(t) * std::sin(t) * std::cos(2 * p); });
    for (int k = 1; k <= 2; ++k) {
        const double v = mixed_volume_k1(u, k);
        for (double c : {0.5, 2.0}) {
            std::vector<double> s(u.values().begin(), u.values().end());
            for (double& x : s) x *= c;
            CHECK(mixed_volume_k1(SupportField(g, s), k) == doctest::Approx(std::pow(c, k + 1) * v).epsilon(1e-12));
            const auto sp = radii_spectrum(SupportField(g, s));
            const auto up = radii_spectrum(u);
            CHECK(sp.lambda_2[7] == doctest::Approx(c * up.lambda_2[7]).epsilon(1e-12));
        }
        CHECK(mixed_volume_k1(plus(u, linear(g, 0.1, 0.2, -0.1)), k) == doctest::Approx(v).epsilon(1e-9));
    }
}

TEST_CASE("Aleksandrov-Fenchel") {
    const GridPtr g = SphereGrid::full_s2(32, 64);
    const auto u = make_initial_field(InitialShape{{{2, 0.1}}, 0.05, 4}, g, 1);
    for (int k = 1; k <= 2; ++k) {
        const auto same = polarized_mixed_volume(u, u, k);
        CHECK(same.v_u == doctest::Approx(same.u_u).epsilon(1e-13));
        CHECK(same.v_v == doctest::Approx(same.u_u).epsilon(1e-13));
        CHECK(std::abs(polarized_mixed_volume(plus(u, linear(g, 0.2, 0.1, -0.3)), u, k).relative_gap()) < 1e-9);
    }
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto v = make_initial_field(InitialShape{{}, 0.1, seed}, g, 1);
        const auto w = make_initial_field(InitialShape{{}, 0.1, seed + 100}, g, 1);
        CHECK(polarized_mixed_volume(v, w, 1).relative_gap() >= -1e-9);
        CHECK(polarized_mixed_volume(v, w, 2).relative_gap() >= -1e-9);
    }
    // sigma_2(A, B) = (tr A tr B - tr AB) / 2 reduces to sigma_2(A) when B = A
    const GridPtr a = SphereGrid::axisym(4, 64);
    const auto ua = sample(a, [](double t, double) { return 1 + 0.1 * std::cos(t) * std::cos(t); });
    const auto va = sample(a, [](double t, double) { return 1 - 0.05 * std::cos(t) * std::cos(t); });
    for (int k = 1; k <= 3; ++k) CHECK(polarized_mixed_volume(va, ua, k).relative_gap() >= -1e-9);
    CHECK_THROWS_AS(polarized_mixed_volume(u, sample(g, [](double t, double) { return std::cos(t) * std::cos(t) - 0.4; }), 2), std::domain_error);
}

TEST_CASE("Minkowski formula") {
    const GridPtr g = SphereGrid::full_s2(64, 128);
    CHECK(minkowski_formula_check(SupportField(g, 0.7), 1) < 1e-10);
    const LegendreProfile f{1.0, 0.05, 2};
    CHECK(minkowski_formula_check(sample(g, [&](double t, double) { return f.value(t); }), 1) < 1e-8);
    const GridPtr a = SphereGrid::axisym(3, 64);
    for (int k = 1; k <= 2; ++k) CHECK(minkowski_formula_check(SupportField(a, 0.7), k) < 1e-12);
    CHECK_THROWS_AS(minkowski_formula_check(SupportField(a, 0.7), 3), std::invalid_argument);
}

TEST_CASE("mesh export") {
    const GridPtr g = SphereGrid::full_s2(8, 16);
    const auto body = embed(SupportField(g, 1.0));
    std::ostringstream obj;
    write_obj(body, *g, obj);
    std::istringstream in(obj.str());
    std::string line;
    std::size_t verts = 0, faces = 0, tri = 0, caps = 0;
    while (std::getline(in, line)) {
        if (line.rfind("v ", 0) == 0) ++verts;
        if (line.rfind("f ", 0) == 0) {
            ++faces;
            std::istringstream f(line.substr(2));
            std::size_t idx, n = 0;
            while (f >> idx) {
                CHECK(idx >= 1);
                CHECK(idx <= g->size());
                ++n;
            }
            (n == 3 ? tri : caps) += 1;
        }
    }
    CHECK(verts == g->size());
    CHECK(tri == 2u * 7u * 16u);
    CHECK(caps == 2u);
    std::ostringstream ply;
    write_ply(body, *g, ply);
    CHECK(ply.str().find("element vertex 128") != std::string::npos);
    CHECK(ply.str().find("element face 226") != std::string::npos);
    CHECK_THROWS(write_obj(embed(SupportField(SphereGrid::axisym(2, 16), 1.0)), *SphereGrid::axisym(2, 16), obj));
}
