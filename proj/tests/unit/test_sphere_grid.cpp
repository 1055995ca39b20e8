#include "cmflow/oracles.hpp"
#include "cmflow/sphere_grid.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <numbers>
#include <random>

using namespace cmflow;
using std::numbers::pi;

namespace {

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

TEST_CASE("grid weights sum to the sphere area") {
    CHECK(quadrature(SupportField(SphereGrid::full_s2(64, 128), 1.0)) == doctest::Approx(4 * pi).epsilon(1e-13));
    CHECK(quadrature(SupportField(SphereGrid::axisym(3, 256), 1.0)) == doctest::Approx(2 * pi * pi).epsilon(1e-13));
    // |S^n| for every supported axisymmetric dimension: 2 pi^{(n+1)/2} / Gamma((n+1)/2)
    for (int n = 2; n <= 8; ++n) {
        const GridPtr g = SphereGrid::axisym(n, 32);
        const double area = 2 * std::pow(pi, (n + 1) / 2.0) / std::tgamma((n + 1) / 2.0);
        CHECK(std::abs(quadrature(SupportField(g, 1.0)) - area) / area < 1e-12);
        CHECK(g->area() == doctest::Approx(area).epsilon(1e-14));
    }
}

TEST_CASE("grid construction rejects invalid requests") {
    CHECK_THROWS_AS(SphereGrid::full_s2(64, 127), std::invalid_argument);
    CHECK_THROWS_AS(SphereGrid::full_s2(4, 8), std::invalid_argument);
    CHECK_THROWS_AS(SphereGrid::build(GridVariant::FullS2, 3, {16, 32}), std::invalid_argument);
    CHECK_THROWS_AS(SphereGrid::axisym(9, 32), std::invalid_argument);
    CHECK_THROWS_AS(SphereGrid::axisym(1, 32), std::invalid_argument);
    CHECK_THROWS_AS(SphereGrid::axisym(3, 33), std::invalid_argument);
    CHECK(parse_grid_variant("Axisym") == GridVariant::Axisym);
    CHECK(to_string(GridVariant::FullS2) == "FullS2");
    CHECK_THROWS(parse_grid_variant("icosahedral"));
}

TEST_CASE("antipode is a fixed-point-free involution") {
    for (const GridPtr& g : {SphereGrid::full_s2(16, 32), SphereGrid::axisym(4, 24)}) {
        const auto a = g->antipode();
        for (std::size_t i = 0; i < g->size(); ++i) {
            CHECK(a[a[i]] == i);
            CHECK(a[i] != i);
            const auto x = g->direction(i);
            const auto y = g->direction(a[i]);
            if (g->variant() == GridVariant::FullS2) {
                for (std::size_t c = 0; c < x.size(); ++c) CHECK(x[c] == doctest::Approx(-y[c]).epsilon(1e-14));
            } else {
                // theta -> pi - theta: the antipode up to a rotation about the axis
                CHECK(x.front() == doctest::Approx(y.front()).epsilon(1e-14));
                CHECK(x.back() == doctest::Approx(-y.back()).epsilon(1e-14));
            }
        }
    }
}

TEST_CASE("quadrature examples") {
    const GridPtr g = SphereGrid::full_s2(64, 128);
    CHECK(std::abs(quadrature(sample(g, [](double t, double) { return std::cos(t); }))) < 1e-13);
    // u = 1/sqrt(2): u sigma_1(W_u) = 2 u^2
    CHECK(quadrature(SupportField(g, 2 * 0.5)) == doctest::Approx(4 * pi).epsilon(1e-13));
    std::vector<double> bad(g->size(), 1.0);
    bad[17] = std::nan("");
    CHECK_THROWS_AS(quadrature(*g, bad), std::domain_error);
}

TEST_CASE("quadrature is exact for low-degree harmonics") {
    const GridPtr g = SphereGrid::full_s2(16, 32);
    // x^2 y^2 z^2 integrates to 4 pi / 105; z^4 to 4 pi / 5
    const auto f = sample(g, [](double t, double p) {
        const double x = std::sin(t) * std::cos(p), y = std::sin(t) * std::sin(p), z = std::cos(t);
        return x * x * y * y * z * z;
    });
    CHECK(quadrature(f) == doctest::Approx(4 * pi / 105).epsilon(1e-13));
    CHECK(quadrature(sample(g, [](double t, double) { return std::pow(std::cos(t), 4); })) == doctest::Approx(4 * pi / 5).epsilon(1e-13));
    // On S^3, cos^2 averages to 1/4.
    const GridPtr a = SphereGrid::axisym(3, 16);
    CHECK(quadrature(sample(a, [](double t, double) { return std::cos(t) * std::cos(t); })) == doctest::Approx(a->area() / 4).epsilon(1e-13));
}

TEST_CASE("quadrature is bit-reproducible") {
    const GridPtr g = SphereGrid::full_s2(32, 64);
    const auto f = sample(g, [](double t, double p) { return std::exp(std::sin(t) * std::cos(3 * p)); });
    const double a = quadrature(f);
    const double b = quadrature(f);
    CHECK(std::memcmp(&a, &b, sizeof a) == 0);
    CHECK(pairwise_sum(std::vector<double>{1.0, 2.0, 3.0}) == 6.0);
    CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
}

TEST_CASE("fornberg weights reproduce polynomial derivatives") {
    const std::vector<double> x = {-0.3, -0.1, 0.05, 0.2, 0.4};
    const auto w = fornberg_weights(0.0, x, 2);
    double s0 = 0, s1 = 0, s2 = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double f = 1 + 2 * x[j] + 3 * x[j] * x[j] - x[j] * x[j] * x[j];
        s0 += w[0][j] * f;
        s1 += w[1][j] * f;
        s2 += w[2][j] * f;
    }
    CHECK(s0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s1 == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(s2 == doctest::Approx(6.0).epsilon(1e-10));
}

TEST_CASE("Hessian of constants and linear functions") {
    const GridPtr g = SphereGrid::full_s2(32, 64);
    const auto h = covariant_hessian_s2(SupportField(g, 2.5));
    for (const auto& m : h) {
        CHECK(std::abs(m.a) < 1e-12);
        CHECK(std::abs(m.b) < 1e-12);
        CHECK(std::abs(m.c) < 1e-12);
    }
    // W annihilates every linear function, including those depending on phi.
    const auto lin = sample(g, [](double t, double p) { return 0.3 * std::sin(t) * std::cos(p) - 0.7 * std::sin(t) * std::sin(p) + std::cos(t); });
    const auto hl = covariant_hessian_s2(lin);
    double err = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i)
        err = std::max({err, std::abs(hl[i].a + lin[i]), std::abs(hl[i].b), std::abs(hl[i].c + lin[i])});
    CHECK(err < 1e-6);
}

TEST_CASE("W kernel converges at order four or better under refinement") {
    const LegendreProfile lin{0.0, 1.0, 1};
    const int s2[] = {16, 32, 64};
    const FdStudy a = hessian_refinement(GridVariant::FullS2, 2, lin, s2);
    CHECK(a.convergent);
    CHECK(a.observed_order >= 4.0);
    const int ax[] = {32, 64, 128};
    const FdStudy b = hessian_refinement(GridVariant::Axisym, 4, lin, ax);
    CHECK(b.convergent);
    CHECK(b.observed_order >= 4.0);
}

TEST_CASE("axisymmetric profile matches the symbolic oracle on FullS2") {
    const GridPtr g = SphereGrid::full_s2(64, 128);
    const LegendreProfile f{1.0, 0.1, 2};
    const auto u = sample(g, [&](double t, double) { return f.value(t); });
    const auto h = covariant_hessian_s2(u);
    // rings next to the equator
    for (int ring : {g->n_theta() / 2 - 1, g->n_theta() / 2}) {
        const std::size_t i = g->node(ring, 5);
        const double t = g->node_theta(i);
        CHECK(h[i].a + u[i] == doctest::Approx(f.radial(t)).epsilon(1e-8));
        CHECK(h[i].c + u[i] == doctest::Approx(f.tangential(t)).epsilon(1e-8));
        CHECK(std::abs(h[i].b) < 1e-10);
    }
}

TEST_CASE("axisymmetric radii") {
    const GridPtr g = SphereGrid::axisym(3, 128);
    const auto r = radii_eigen_axisym(SupportField(g, 0.8));
    CHECK(max_abs(r.radial) == doctest::Approx(0.8));
    for (std::size_t i = 0; i < g->size(); ++i) {
        // second differences on 128 nodes amplify roundoff by about N^2
        CHECK(std::abs(r.radial[i] - 0.8) < 1e-10);
        CHECK(std::abs(r.tangential[i] - 0.8) < 1e-10);
    }
    const auto c = radii_eigen_axisym(sample(g, [](double t, double) { return std::cos(t); }));
    CHECK(max_abs(c.radial) < 1e-9);
    CHECK(max_abs(c.tangential) < 1e-10);

    const LegendreProfile f{1.0, 0.05, 2};
    const auto p = radii_eigen_axisym(sample(g, [&](double t, double) { return f.value(t); }));
    double err = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        const double t = g->node_theta(i);
        err = std::max({err, std::abs(p.radial[i] - f.radial(t)), std::abs(p.tangential[i] - f.tangential(t))});
    }
    CHECK(err < 1e-8);
}

TEST_CASE("derivatives across the poles") {
    const GridPtr g = SphereGrid::full_s2(32, 64);
    // z = cos(theta) and x = sin(theta) cos(phi) are smooth through the poles.
    const auto x = sample(g, [](double t, double p) { return std::sin(t) * std::cos(p); });
    const auto d = derivatives_s2(x);
    double e1 = 0.0, e2 = 0.0, e3 = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        const double t = g->node_theta(i), p = g->node_phi(i);
        e1 = std::max(e1, std::abs(d.u_t[i] - std::cos(t) * std::cos(p)));
        e2 = std::max(e2, std::abs(d.u_tt[i] + std::sin(t) * std::cos(p)));
        e3 = std::max(e3, std::abs(d.u_p[i] + std::sin(t) * std::sin(p)));
    }
    CHECK(e1 < 1e-6);
    CHECK(e2 < 1e-5);
    CHECK(e3 < 1e-12);
    const auto grad = gradient(x);
    for (std::size_t i = 0; i < g->size(); ++i) {
        const double t = g->node_theta(i), p = g->node_phi(i);
        CHECK(grad.g_phi[i] == doctest::Approx(-std::sin(p)).epsilon(1e-9));
        CHECK(grad.g_theta[i] == doctest::Approx(std::cos(t) * std::cos(p)).epsilon(1e-6));
    }
}

TEST_CASE("symmetrize_even") {
    const GridPtr g = SphereGrid::full_s2(16, 32);
    const auto even = sample(g, [](double t, double p) { return 1 + std::cos(t) * std::cos(t) + 0.1 * std::sin(t) * std::sin(t) * std::cos(2 * p); });
    const auto s = symmetrize_even(even);
    for (std::size_t i = 0; i < g->size(); ++i) CHECK(s[i] == doctest::Approx(even[i]).epsilon(1e-15));

    const auto one = symmetrize_even(sample(g, [](double t, double) { return 1 + std::cos(t); }));
    for (std::size_t i = 0; i < g->size(); ++i) CHECK(one[i] == doctest::Approx(1.0).epsilon(1e-14));

    const auto mixed = symmetrize_even(sample(g, [](double t, double) { return 1 + std::cos(t) + std::cos(t) * std::cos(t); }));
    for (std::size_t i = 0; i < g->size(); ++i) {
        const double c = std::cos(g->node_theta(i));
        CHECK(mixed[i] == doctest::Approx(1 + c * c).epsilon(1e-14));
    }
    CHECK(antipodal_defect(mixed) == 0.0);
    // idempotent and exact
    const auto twice = symmetrize_even(mixed);
    for (std::size_t i = 0; i < g->size(); ++i) CHECK(twice[i] == mixed[i]);
}

TEST_CASE("Hessian commutes with the antipodal pullback on even fields") {
    const GridPtr g = SphereGrid::full_s2(32, 64);
    const auto u = symmetrize_even(sample(g, [](double t, double p) {
        const double x = std::sin(t) * std::cos(p), y = std::sin(t) * std::sin(p), z = std::cos(t);
        return 1 + 0.2 * x * y + 0.1 * z * z + 0.05 * x * x * z * z;
    }));
    const auto h = covariant_hessian_s2(u);
    const auto a = g->antipode();
    double err = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        // The frame (e_theta, e_phi) maps to (e_theta, -e_phi) under the antipode.
        err = std::max({err, std::abs(h[i].a - h[a[i]].a), std::abs(h[i].c - h[a[i]].c), std::abs(h[i].b + h[a[i]].b)});
    }
    CHECK(err < 1e-10);
}

TEST_CASE("polar filter keeps resolvable modes") {
    const GridPtr g = SphereGrid::full_s2(32, 64);
    auto f = sample(g, [](double t, double p) { return 1 + std::sin(t) * std::cos(p) + std::sin(t) * std::sin(t) * std::sin(2 * p); });
    const auto before = std::vector<double>(f.values().begin(), f.values().end());
    polar_filter(*g, f.values_mut());
    for (std::size_t i = 0; i < g->size(); ++i) CHECK(f[i] == doctest::Approx(before[i]).epsilon(1e-12));
    // The highest longitude mode on the ring nearest the pole is removed.
    std::vector<double> hi(g->size());
    for (std::size_t i = 0; i < g->size(); ++i) hi[i] = std::cos(20.0 * g->node_phi(i));
    polar_filter(*g, hi);
    for (int c = 0; c < g->n_phi(); ++c) CHECK(std::abs(hi[g->node(0, c)]) < 1e-12);
    for (int c = 0; c < g->n_phi(); ++c) CHECK(hi[g->node(g->n_theta() / 2, c)] == doctest::Approx(std::cos(20.0 * g->phi()[static_cast<std::size_t>(c)])));
    CHECK(g->filter_cutoff(0) >= 1);
}

TEST_CASE("field files round-trip") {
    const GridPtr g = SphereGrid::full_s2(16, 32);
    const auto f = sample(g, [](double t, double p) { return std::exp(std::sin(t) * std::cos(p)) / 3.0; });
    const std::string path = "test_sphere_grid_field.txt";
    save_field(f, path);
    const auto back = load_field(g, path);
    for (std::size_t i = 0; i < g->size(); ++i) CHECK(back[i] == f[i]);
    CHECK_THROWS(load_field(SphereGrid::full_s2(8, 16), path));
    std::remove(path.c_str());
    CHECK_THROWS(load_field(g, "no_such_file.txt"));
}

TEST_CASE("scaled weights hook") {
    const GridPtr g = SphereGrid::full_s2(16, 32);
    const GridPtr h = g->with_scaled_weights(1.5);
    CHECK(quadrature(SupportField(h, 1.0)) == doctest::Approx(1.5 * 4 * pi));
    CHECK(h->area() == g->area());
}
