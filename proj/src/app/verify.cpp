#include "cmflow/app.hpp"

#include "cmflow/convex_calculus.hpp"
#include "cmflow/oracles.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace cmflow::app {

namespace {

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(3) << v;
    return s.str();
}

CheckRow check(std::string name, bool pass, std::string detail) { return CheckRow{std::move(name), pass, std::move(detail)}; }

// Runs f and turns an exception into a failing row.
template <class F>
CheckRow guarded(const std::string& name, F&& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        return check(name, false, e.what());
    }
}

double radius_of(const std::variant<double, BlowUp>& r) {
    if (const double* v = std::get_if<double>(&r)) return *v;
    return std::nan("");
}

CheckRow ode_tracking(int k, double alpha, double t_end, int res) {
    const std::string name = "round body tracks sphere ODE (k alpha = " + fmt(k * alpha) + ")";
    return guarded(name, [&] {
        FlowConfig c;
        c.k = k;
        c.alpha = alpha;
        c.t_max = t_end;
        c.snapshot_every = 1;
        c.resolution = {res, 2 * res};
        const GridPtr g = SphereGrid::build(GridVariant::FullS2, 2, c.resolution);
        const FlowResult r = evolve_unnormalized(SupportField(g, 1.0), SupportField(g, 1.0), c);
        const SphereODE ode{2, k, alpha, 1.0};
        double err = 0.0;
        for (const auto& s : r.snapshots) {
            const double exact = radius_of(sphere_radius(s.t, ode));
            for (std::size_t i = 0; i < s.u.size(); ++i) err = std::max(err, std::abs(s.u[i] / exact - 1.0));
        }
        const bool reached = std::abs(r.t_final - t_end) < 1e-12;
        return check(name, reached && err < 1e-4, "sup rel err " + fmt(err) + " up to t = " + fmt(r.t_final));
    });
}

CheckRow refinement(const std::string& name, GridVariant v, int n_dim, const LegendreProfile& profile, int res) {
    return guarded(name, [&] {
        const int sizes[] = {res / 4, res / 2, res};
        for (int s : sizes)
            if (s < 8) throw std::invalid_argument("refinement to " + std::to_string(res) + " needs a coarsest grid of 8, got " + std::to_string(s));
        const FdStudy st = hessian_refinement(v, n_dim, profile, sizes);
        std::string detail = "errors";
        for (double e : st.errors) detail += " " + fmt(e);
        detail += ", order " + fmt(st.observed_order);
        return check(name, st.convergent && st.observed_order >= 4.0, detail);
    });
}

}  // namespace

std::vector<CheckRow> run_verify(const VerifyOptions& o) {
    std::vector<CheckRow> rows;
    const int res = o.resolution;

    rows.push_back(guarded("sphere ODE, k alpha = 1", [] {
        const double r = radius_of(sphere_radius(0.5, SphereODE{2, 1, 1.0, 1.0}));
        return check("sphere ODE, k alpha = 1", std::abs(r - std::numbers::e) < 1e-12, "r(0.5) = " + fmt(r));
    }));
    rows.push_back(guarded("sphere ODE blow-up time", [] {
        const SphereODE ode{2, 1, 2.0, 1.0};
        const double ts = ode.blowup_time().value_or(0.0);
        const bool blows = std::holds_alternative<BlowUp>(sphere_radius(0.3, ode));
        return check("sphere ODE blow-up time", std::abs(ts - 0.25) < 1e-15 && blows, "T* = " + fmt(ts));
    }));
    rows.push_back(guarded("sphere ODE composition", [] {
        double worst = 0.0;
        for (const auto& ode : {SphereODE{2, 1, 2.0, 1.0}, SphereODE{3, 2, 0.25, 1.0}, SphereODE{3, 1, 1.0, 0.7}}) {
            const double t1 = 0.03, t2 = 0.05;
            const double direct = radius_of(sphere_radius(t1 + t2, ode));
            SphereODE mid = ode;
            mid.r0 = radius_of(sphere_radius(t1, ode));
            worst = std::max(worst, std::abs(radius_of(sphere_radius(t2, mid)) / direct - 1.0));
        }
        return check("sphere ODE composition", worst < 1e-12, "max rel defect " + fmt(worst));
    }));
    rows.push_back(guarded("stationary radius", [] {
        const double e = std::max({std::abs(stationary_radius(2, 1) - std::pow(2.0, -0.5)), std::abs(stationary_radius(3, 2) - std::cbrt(1.0 / 3.0)),
                                   std::abs(stationary_radius(3, 1) - std::sqrt(1.0 / 3.0))});
        return check("stationary radius", e < 1e-15, "max defect " + fmt(e));
    }));
    rows.push_back(ode_tracking(1, 2.0, 0.225, 16));
    rows.push_back(ode_tracking(1, 1.0, 0.5, 16));

    rows.push_back(guarded("sigma_k gradient vs finite differences", [] {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> d(0.2, 3.0);
        double worst = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            const int n = 2 + trial % 5;
            std::vector<double> l(static_cast<std::size_t>(n));
            for (double& x : l) x = d(rng);
            for (int k = 1; k <= n; ++k) worst = std::max(worst, sigma_gradient_fd_error(l, k, 1e-5));
        }
        return check("sigma_k gradient vs finite differences", worst < 1e-6, "max rel err " + fmt(worst));
    }));

    rows.push_back(refinement("Hessian order, FullS2, 1 + 0.05 P2", GridVariant::FullS2, 2, {1.0, 0.05, 2}, res));
    rows.push_back(refinement("W kernel on cos(theta), FullS2", GridVariant::FullS2, 2, {0.0, 1.0, 1}, res));
    rows.push_back(refinement("Hessian order, Axisym n=3, 1 + 0.05 P2", GridVariant::Axisym, 3, {1.0, 0.05, 2}, 2 * res));

    rows.push_back(guarded("Minkowski formula", [&] {
        double worst = 0.0;
        const LegendreProfile body{1.0, 0.05, 2};
        const auto shape = [&](double th, double ph) { return body.value(th) + 0.02 * std::sin(th) * std::sin(th) * std::cos(2 * ph); };
        worst = std::max(worst, minkowski_formula_check(sample(SphereGrid::full_s2(res, 2 * res), shape), 1));
        const GridPtr ax = SphereGrid::axisym(3, 2 * res);
        const SupportField u = sample(ax, [&](double th, double) { return body.value(th); });
        for (int k = 1; k <= 2; ++k) worst = std::max(worst, minkowski_formula_check(u, k));
        return check("Minkowski formula", worst < 1e-8, "max defect " + fmt(worst));
    }));

    rows.push_back(guarded("Aleksandrov-Fenchel inequality", [&] {
        const int n = std::max(16, res / 2);
        const GridPtr g = SphereGrid::full_s2(n, 2 * n);
        double min_gap = 1.0;
        double eq_gap = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const SupportField u = make_initial_field(InitialShape{{}, 0.1, static_cast<std::uint64_t>(2 * trial + 1)}, g, 1);
            const SupportField v = make_initial_field(InitialShape{{}, 0.1, static_cast<std::uint64_t>(2 * trial + 2)}, g, 1);
            min_gap = std::min(min_gap, polarized_mixed_volume(v, u, 1).relative_gap());
            std::vector<double> w(u.values().begin(), u.values().end());
            for (std::size_t i = 0; i < w.size(); ++i) {
                const auto x = g->direction(i);
                w[i] += 0.1 * x[0] - 0.05 * x[1] + 0.2 * x[2];
            }
            eq_gap = std::max(eq_gap, std::abs(polarized_mixed_volume(SupportField(g, std::move(w)), u, 1).relative_gap()));
        }
        return check("Aleksandrov-Fenchel inequality", min_gap >= -1e-9 && eq_gap < 1e-9,
                     "min gap " + fmt(min_gap) + ", equality case " + fmt(eq_gap));
    }));

    rows.push_back(guarded("normalized volume of the stationary sphere", [&] {
        GridPtr g = SphereGrid::full_s2(res, 2 * res);
        if (o.weight_scale != 1.0) g = g->with_scaled_weights(o.weight_scale);
        const SupportField u(g, stationary_radius(2, 1));
        const double v = mixed_volume_k1(u, 1);
        const double rel = std::abs(v - g->area()) / g->area();
        return check("normalized volume of the stationary sphere", rel < 1e-12, "rel defect " + fmt(rel));
    }));
    return rows;
}

int cmd_verify(const VerifyOptions& o, std::ostream& out) {
    const auto rows = run_verify(o);
    std::size_t width = 0;
    for (const auto& r : rows) width = std::max(width, r.name.size());
    bool all = true;
    for (const auto& r : rows) {
        all = all && r.pass;
        out << (r.pass ? "PASS  " : "FAIL  ") << std::left << std::setw(static_cast<int>(width)) << r.name << "  " << r.detail << '\n';
    }
    out << (all ? "all checks passed" : "some checks failed") << '\n';
    return all ? kOk : kCheckFailed;
}

}  // namespace cmflow::app
