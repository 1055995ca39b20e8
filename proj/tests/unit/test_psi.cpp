#include "cmflow/psi.hpp"
#include "cmflow/residual.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <vector>

using namespace cmflow;

namespace {

// Smallest radius of f = 1 + eps P2(cos theta) from the two 1-D closed forms
// f'' + f and cot(theta) f' + f, scanned densely in theta.
double closed_form_min_radius(double eps) {
    double m = 1e300;
    for (int i = 0; i <= 4000; ++i) {
        const double t = M_PI * i / 4000;
        const double c = std::cos(t), s = std::sin(t);
        const double f = 1 + eps * (1.5 * c * c - 0.5);
        const double fpp = eps * (-3 * (c * c - s * s));
        const double cot_fp = eps * (-3 * c * c);  // cot(theta) * (-3 c s)
        m = std::min({m, fpp + f, cot_fp + f});
    }
    return m;
}

double bisect(double lo, double hi) {
    // lo admissible, hi not
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (closed_form_min_radius(mid) > 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("psi parsing and round trip") {
    const auto p = PsiSpec::parse("PowerOfBase", "epsilon=0.1; degree=2; exponent=3");
    CHECK(p.family() == PsiFamily::PowerOfBase);
    CHECK(p.epsilon() == 0.1);
    CHECK(p.degree() == 2);
    CHECK(p.exponent() == 3.0);
    const auto q = PsiSpec::parse(to_string(p.family()), p.params_text());
    CHECK(q.params_text() == p.params_text());
    for (double t : {0.0, 0.3, 1.2, M_PI}) CHECK(q(t) == p(t));

    const auto e = PsiSpec::even_harmonic(0.2, 4, 2.0);
    const auto e2 = PsiSpec::parse("EvenHarmonic", e.params_text());
    CHECK(e2.scale() == 2.0);
    CHECK(e2.degree() == 4);

    CHECK_THROWS_AS(PsiSpec::parse("EvenHarmonic", "epsilon=0.1; degree=2; colour=3"), std::invalid_argument);
    CHECK_THROWS_AS(PsiSpec::parse("EvenHarmonic", "epsilon=0.1; degree=3"), std::invalid_argument);
    CHECK_THROWS_AS(PsiSpec::parse("Nope", ""), std::invalid_argument);
    CHECK_THROWS_AS(PsiSpec::constant(0.0), std::invalid_argument);
    CHECK_THROWS_AS(PsiSpec::constant(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(PsiSpec::even_harmonic(2.5, 2), std::invalid_argument);  // 1 - 1.25 at the equator
    CHECK_THROWS_AS(PsiSpec::parse("Constant", "scale=1; scale=2"), std::invalid_argument);
}

TEST_CASE("psi evaluation") {
    const auto p = PsiSpec::power_of_base(0.1, 2, 3.0);
    for (double t : {0.0, 0.7, 1.5}) {
        const double c = std::cos(t);
        CHECK(p(t) == doctest::Approx(std::pow(1 + 0.1 * (1.5 * c * c - 0.5), 3)).epsilon(1e-15));
    }
    const GridPtr g = SphereGrid::full_s2(16, 32);
    const auto s = eval_psi(p, g);
    CHECK(check_even(s) < 1e-15);
    const auto odd = eval_psi(PsiSpec::power_of_base(0.1, 1, 1.0), g);
    CHECK(check_even(odd) > 0.1);
}

TEST_CASE("constant psi is admissible") {
    const GridPtr g = SphereGrid::full_s2(32, 64);
    const auto r = check_admissible(eval_psi(PsiSpec::constant(), g), 1, 1.0);
    CHECK(r.admissible);
    CHECK(r.forms_agree);
    CHECK(r.min_eigenvalue == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.p == 2.0);
    CHECK(r.alpha_in_theorem_range == false);  // alpha = 1/k
    CHECK(check_admissible(eval_psi(PsiSpec::constant(), g), 1, 2.0).alpha_in_theorem_range);
}

TEST_CASE("power family threshold matches the closed-form bisection") {
    const double eps_star = bisect(0.0, 1.0);
    CHECK(eps_star == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(bisect(0.0, -1.0) == doctest::Approx(-0.4).epsilon(1e-6));

    const GridPtr g = SphereGrid::axisym(2, 128);
    const int k = 1;
    const double alpha = 2.0;
    // base 1 + eps P2 raised to 1 + k alpha gives f = 1 + eps P2 exactly
    for (double eps : {0.1, 0.3, 0.45, -0.3}) {
        const auto r = check_admissible(eval_psi(PsiSpec::power_of_base(eps, 2, 1 + k * alpha), g), k, alpha);
        CHECK(r.admissible);
        // nodes stop short of the poles where the minimum sits
        CHECK(std::abs(r.min_eigenvalue - closed_form_min_radius(eps)) < 1e-3);
    }
    for (double eps : {0.55, 0.7}) {
        const auto r = check_admissible(eval_psi(PsiSpec::power_of_base(eps, 2, 1 + k * alpha), g), k, alpha);
        CHECK_FALSE(r.admissible);
        CHECK(r.min_eigenvalue < 0.0);
    }
}

TEST_CASE("the two admissibility forms agree on a (k, alpha) sweep") {
    const GridPtr g = SphereGrid::axisym(4, 96);
    for (int k = 1; k <= 3; ++k)
        for (double alpha : {0.5, 1.0, 2.0, 4.0})
            for (double eps : {0.05, 0.3, 0.8}) {
                const auto r = check_admissible(eval_psi(PsiSpec::power_of_base(eps, 2, 1 + k * alpha), g), k, alpha);
                CHECK(r.forms_agree);
                CHECK((r.min_eigenvalue > 0) == (r.min_eigenvalue_tilde > 0));
                CHECK_NOTHROW(cross_check_pc_relation(alpha, k));
            }
}

TEST_CASE("sampled psi validation") {
    const GridPtr g = SphereGrid::full_s2(8, 16);
    const std::string path = "test_psi_sampled.txt";
    std::vector<double> v(g->size(), 1.5);
    save_field(SupportField(g, v), path);
    CHECK(load_sampled_psi(g, path)[3] == 1.5);
    v[5] = -1.0;
    save_field(SupportField(g, v), path);
    CHECK_THROWS_AS(load_sampled_psi(g, path), std::domain_error);
    std::remove(path.c_str());
}
