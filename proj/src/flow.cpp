#include "cmflow/flow.hpp"

#include "cmflow/convex_calculus.hpp"

#include <boost/math/special_functions/legendre.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace cmflow {

namespace {

constexpr double kMonotonicityTol = 1e-9;
constexpr double kEtaTol = 1e-8;
constexpr double kVolumeTol = 1e-10;

struct Problem {
    GridPtr grid;
    std::vector<double> psi;
    std::vector<double> psi_weight;  // psi^{-1/alpha}
    int k = 1;
    double alpha = 1.0;
    bool normalized = true;
    bool even = true;
    double tol = 1e-7;
};

// Everything the stepper needs to know about one state.
struct Evaluation {
    bool ok = false;
    double min_radius = 0.0;
    std::vector<double> sigma;
    std::vector<double> speed;  // psi sigma_k^alpha
    std::vector<double> rhs;    // filtered
    double eta = 0.0;
};

Evaluation evaluate(const Problem& p, const std::vector<double>& u) {
    Evaluation e;
    const SupportField f(p.grid, u);
    const RadiiSpectrum s = radii_spectrum(f);
    e.min_radius = min_radius(s);
    const std::size_t n = u.size();
    e.sigma.resize(n);
    e.speed.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double sk = sigma_k_pair(s.variant, s.n_dim, s.lambda_1[i], s.lambda_2[i], p.k);
        if (!(sk > 0.0) || !std::isfinite(sk)) return e;
        e.sigma[i] = sk;
        e.speed[i] = p.psi[i] * std::pow(sk, p.alpha);
    }
    e.rhs = e.speed;
    if (p.normalized) {
        std::vector<double> integrand(n);
        for (std::size_t i = 0; i < n; ++i) integrand[i] = e.speed[i] * e.sigma[i];
        e.eta = quadrature(*p.grid, integrand) / p.grid->area();
        for (std::size_t i = 0; i < n; ++i) e.rhs[i] -= e.eta * u[i];
    }
    polar_filter(*p.grid, e.rhs);
    e.ok = true;
    return e;
}

struct State {
    std::vector<double> u;
    double t = 0.0;
    Evaluation eval;
    double volume = 0.0;
    double J = 0.0;
    double relspread = 0.0;
};

State make_state(const Problem& p, std::vector<double> u, double t, Evaluation e) {
    State s;
    s.t = t;
    s.eval = std::move(e);
    s.u = std::move(u);
    if (!s.eval.ok) return s;
    const std::size_t n = s.u.size();
    std::vector<double> vol(n), jint(n), rs(n);
    for (std::size_t i = 0; i < n; ++i) {
        vol[i] = s.u[i] * s.eval.sigma[i];
        jint[i] = p.psi_weight[i] * std::pow(s.u[i], 1.0 + 1.0 / p.alpha);
        rs[i] = s.eval.speed[i] * s.eval.sigma[i];
    }
    s.volume = quadrature(*p.grid, vol);
    s.J = quadrature(*p.grid, jint);
    // rho = speed / u averaged against d sigma = u sigma_k d mu.
    const double mean = quadrature(*p.grid, rs) / s.volume;
    for (std::size_t i = 0; i < n; ++i) s.relspread = std::max(s.relspread, std::abs(s.eval.speed[i] / (s.u[i] * mean) - 1.0));
    return s;
}

State make_state(const Problem& p, std::vector<double> u, double t) {
    Evaluation e = evaluate(p, u);
    return make_state(p, std::move(u), t, std::move(e));
}

// Evaluation of lambda * u from that of u: W is linear, so sigma_k scales by lambda^k.
Evaluation rescale(const Problem& p, Evaluation e, const std::vector<double>& scaled_u, double lambda) {
    const double ls = std::pow(lambda, p.k);
    const double lv = std::pow(ls, p.alpha);
    e.min_radius *= lambda;
    const std::size_t n = scaled_u.size();
    std::vector<double> integrand(n);
    for (std::size_t i = 0; i < n; ++i) {
        e.sigma[i] *= ls;
        e.speed[i] *= lv;
        integrand[i] = e.speed[i] * e.sigma[i];
    }
    e.rhs = e.speed;
    if (p.normalized) {
        e.eta = quadrature(*p.grid, integrand) / p.grid->area();
        for (std::size_t i = 0; i < n; ++i) e.rhs[i] -= e.eta * scaled_u[i];
    }
    polar_filter(*p.grid, e.rhs);
    return e;
}

enum class Verdict { Accepted, RejectedError, RejectedConvexity, RejectedMonotonicity, RejectedRhs };

struct Attempt {
    Verdict verdict = Verdict::RejectedRhs;
    double error_norm = 0.0;
    State next;
};

// One Bogacki-Shampine 3(2) step. The new point is symmetrized before its rhs
// is evaluated and renormalized afterwards, so k4 doubles as the next k1.
Attempt try_step(const Problem& p, const State& s, double dt) {
    Attempt a;
    const std::size_t n = s.u.size();
    const auto& u = s.u;
    const auto& k1 = s.eval.rhs;
    std::vector<double> y(n);

    for (std::size_t i = 0; i < n; ++i) y[i] = u[i] + 0.5 * dt * k1[i];
    const Evaluation e2 = evaluate(p, y);
    if (!e2.ok) return a;
    const auto& k2 = e2.rhs;

    for (std::size_t i = 0; i < n; ++i) y[i] = u[i] + 0.75 * dt * k2[i];
    const Evaluation e3 = evaluate(p, y);
    if (!e3.ok) return a;
    const auto& k3 = e3.rhs;

    for (std::size_t i = 0; i < n; ++i) y[i] = u[i] + dt * (2.0 / 9.0 * k1[i] + 1.0 / 3.0 * k2[i] + 4.0 / 9.0 * k3[i]);
    if (p.even) symmetrize_even_inplace(*p.grid, y);
    Evaluation e4 = evaluate(p, y);
    if (!e4.ok) {
        a.verdict = Verdict::RejectedConvexity;
        return a;
    }
    const auto& k4 = e4.rhs;

    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double err = dt * (-5.0 / 72.0 * k1[i] + 1.0 / 12.0 * k2[i] + 1.0 / 9.0 * k3[i] - 1.0 / 8.0 * k4[i]);
        norm = std::max(norm, std::abs(err) / (p.tol * (1.0 + std::abs(u[i]))));
    }
    a.error_norm = norm;
    if (!(norm <= 1.0)) {
        a.verdict = Verdict::RejectedError;
        return a;
    }

    if (p.normalized) {
        std::vector<double> vol(n);
        for (std::size_t i = 0; i < n; ++i) vol[i] = y[i] * e4.sigma[i];
        const double v = quadrature(*p.grid, vol);
        const double lambda = std::pow(p.grid->area() / v, 1.0 / (p.k + 1));
        for (double& x : y) x *= lambda;
        e4 = rescale(p, std::move(e4), y, lambda);
    }
    a.next = make_state(p, std::move(y), s.t + dt, std::move(e4));
    if (!a.next.eval.ok || !(a.next.eval.min_radius > 0.0)) {
        a.verdict = Verdict::RejectedConvexity;
        return a;
    }
    if (p.normalized && a.next.J > s.J + kMonotonicityTol * std::abs(s.J)) {
        a.verdict = Verdict::RejectedMonotonicity;
        return a;
    }
    a.verdict = Verdict::Accepted;
    return a;
}

// Real-axis stability interval of the Bogacki-Shampine pair is about [-2.5, 0].
constexpr double kStabilityBoundary = 2.5;
constexpr double kStabilitySafety = 0.7;
constexpr std::size_t kSpectralRefresh = 25;

// Dominant eigenvalue magnitude of the rhs Jacobian by nonlinear power
// iteration; v carries the eigenvector estimate between calls.
double spectral_radius(const Problem& p, const State& s, std::vector<double>& v, int max_iter) {
    const std::size_t n = s.u.size();
    auto norm2 = [](const std::vector<double>& x) {
        double a = 0.0;
        for (double e : x) a += e * e;
        return std::sqrt(a);
    };
    if (v.size() != n) {
        std::mt19937_64 rng(0x5eed);
        std::uniform_real_distribution<double> d(-1.0, 1.0);
        v.resize(n);
        for (double& x : v) x = d(rng);
        polar_filter(*p.grid, v);
        if (p.even) symmetrize_even_inplace(*p.grid, v);
    }
    double unorm = 0.0;
    for (double x : s.u) unorm = std::max(unorm, std::abs(x));
    double rho = 0.0;
    std::vector<double> y(n);
    for (int it = 0; it < max_iter; ++it) {
        const double vn = norm2(v);
        if (!(vn > 0.0)) break;
        const double eps = 1e-7 * (1.0 + unorm) / vn;
        for (std::size_t i = 0; i < n; ++i) y[i] = s.u[i] + eps * v[i];
        const Evaluation e = evaluate(p, y);
        if (!e.ok) break;
        for (std::size_t i = 0; i < n; ++i) v[i] = (e.rhs[i] - s.eval.rhs[i]) / (eps * vn);
        if (p.even) symmetrize_even_inplace(*p.grid, v);
        const double next = norm2(v);
        const bool settled = it > 0 && std::abs(next - rho) < 0.01 * next;
        rho = next;
        if (settled) break;
    }
    return rho;
}

double grad_quantity(const GridPtr& grid, const std::vector<double>& u, double gamma) {
    const SupportField f(grid, u);
    const TangentGradient g = gradient(f);
    double q = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        q = std::max(q, (g.g_theta[i] * g.g_theta[i] + g.g_phi[i] * g.g_phi[i]) / std::pow(u[i], gamma));
    return q;
}

TraceRecord make_record(const Problem& p, const State& s, double dt, double gamma) {
    TraceRecord r;
    r.t = s.t;
    r.eta = s.eval.eta;
    r.J = s.J;
    r.volume = s.volume;
    r.min_radius = s.eval.min_radius;
    r.u_min = *std::min_element(s.u.begin(), s.u.end());
    r.u_max = *std::max_element(s.u.begin(), s.u.end());
    r.grad_q = grad_quantity(p.grid, s.u, gamma);
    r.residual = s.relspread;
    r.dt = dt;
    return r;
}

Problem make_problem(const SupportField& u0, const SupportField& psi, const FlowConfig& cfg, bool normalized, bool even) {
    if (&u0.grid() != &psi.grid()) throw std::invalid_argument("u0 and psi live on different grids");
    Problem p;
    p.grid = u0.grid_ptr();
    p.psi.assign(psi.values().begin(), psi.values().end());
    p.psi_weight.resize(p.psi.size());
    for (std::size_t i = 0; i < p.psi.size(); ++i) p.psi_weight[i] = std::pow(p.psi[i], -1.0 / cfg.alpha);
    p.k = cfg.k;
    p.alpha = cfg.alpha;
    p.normalized = normalized;
    p.even = even;
    p.tol = cfg.step.tol;
    return p;
}

bool psi_is_even(const SupportField& psi) { return check_even(psi) <= 1e-12 * psi.max(); }

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Accepted: return "accepted";
        case Verdict::RejectedError: return "error estimate above tolerance";
        case Verdict::RejectedConvexity: return "loss of convexity";
        case Verdict::RejectedMonotonicity: return "increase of J";
        case Verdict::RejectedRhs: return "sigma_k not positive in a stage";
    }
    return "?";
}

// Shared driver for the normalized and unnormalized flows.
FlowResult run(const SupportField& u0_in, const SupportField& psi, const FlowConfig& cfg, bool normalized) {
    validate(cfg);
    const bool even = psi_is_even(psi);
    if (!even && !cfg.allow_uneven) throw InadmissiblePsi("psi is not even (antipodal defect " + std::to_string(check_even(psi)) + ")");
    Problem p = make_problem(u0_in, psi, cfg, normalized, even);
    const double gamma = cfg.gradient_gamma();

    std::vector<double> u0(u0_in.values().begin(), u0_in.values().end());
    polar_filter(*p.grid, u0);
    if (even) symmetrize_even_inplace(*p.grid, u0);
    if (normalized) {
        const double lambda = renormalization_factor(SupportField(p.grid, u0), cfg.k);
        for (double& x : u0) x *= lambda;
    }

    FlowResult result;
    if (!even) result.flags.push_back("uneven_psi");
    State state = make_state(p, std::move(u0), 0.0);
    if (!state.eval.ok || !(state.eval.min_radius > 0.0))
        throw ConfigError("initial support function is not uniformly convex (min radius " + std::to_string(state.eval.min_radius) + ")");

    RunStats& st = result.stats;
    st.eta0 = state.eval.eta;
    st.max_eta_ratio = 1.0;
    st.min_eta = state.eval.eta;
    st.min_min_radius = state.eval.min_radius;
    st.u_min = *std::min_element(state.u.begin(), state.u.end());
    st.u_max = *std::max_element(state.u.begin(), state.u.end());
    st.u_max_initial = st.u_max;
    if (normalized) st.max_volume_defect = std::abs(state.volume - p.grid->area()) / p.grid->area();

    const int snap_every = normalized ? cfg.snapshot_every : std::max(1, cfg.snapshot_every);
    auto record = [&](double dt) {
        result.trace.records.push_back(make_record(p, state, dt, gamma));
        st.max_grad_q = std::max(st.max_grad_q, result.trace.records.back().grad_q);
    };
    auto snapshot = [&] {
        if (snap_every <= 0) return;
        if (!result.snapshots.empty() && result.snapshots.back().t == state.t) return;
        result.snapshots.push_back(Snapshot{state.t, SupportField(p.grid, state.u)});
    };
    record(0.0);
    snapshot();

    std::vector<double> eigvec;
    double dt_stable = std::numeric_limits<double>::infinity();
    auto refresh_stability = [&](int iters) {
        if (!cfg.step.stability_limit) return;
        const double rho = spectral_radius(p, state, eigvec, iters);
        if (rho > 0.0) dt_stable = kStabilitySafety * kStabilityBoundary / rho;
    };
    refresh_stability(40);

    double dt = std::min({cfg.step.dt_init, cfg.step.dt_max, dt_stable});
    double last_dt = 0.0;
    Verdict last_rejection = Verdict::Accepted;
    result.status = FlowStatus::NotConverged;
    const double t_eps = 1e-12 * std::max(1.0, cfg.t_max);

    while (true) {
        if (normalized && state.relspread < cfg.residual_tol) {
            result.status = FlowStatus::Converged;
            break;
        }
        if (state.t >= cfg.t_max - t_eps) {
            result.status = normalized ? FlowStatus::NotConverged : FlowStatus::ReachedTMax;
            if (normalized) result.message = "residual above tolerance at t_max";
            break;
        }
        if (st.accepted_steps >= cfg.max_steps) {
            result.status = FlowStatus::NotConverged;
            result.message = "step limit reached";
            break;
        }
        const double remaining = cfg.t_max - state.t;
        const double h = std::min({dt, dt_stable, remaining});
        Attempt a = try_step(p, state, h);
        if (a.verdict != Verdict::Accepted) {
            last_rejection = a.verdict;
            switch (a.verdict) {
                case Verdict::RejectedError: ++st.rejected_error; break;
                case Verdict::RejectedConvexity: ++st.rejected_convexity; break;
                case Verdict::RejectedMonotonicity: ++st.rejected_monotonicity; break;
                default: ++st.rejected_rhs; break;
            }
            dt = 0.5 * h;
            if (dt < cfg.step.dt_min) {
                const bool invariant = last_rejection == Verdict::RejectedConvexity || last_rejection == Verdict::RejectedMonotonicity;
                result.status = invariant ? FlowStatus::InvariantViolation : FlowStatus::StepUnderflow;
                std::ostringstream msg;
                msg << "time step fell below dt_min at t = " << state.t << " (" << verdict_name(last_rejection) << ")";
                result.message = msg.str();
                break;
            }
            continue;
        }

        const double j_old = state.J;
        state = std::move(a.next);
        ++st.accepted_steps;
        last_dt = h;
        if (normalized) {
            const double jrel = (state.J - j_old) / std::abs(j_old);
            st.max_rel_j_increase = st.accepted_steps == 1 ? jrel : std::max(st.max_rel_j_increase, jrel);
            st.final_dj_rate = std::abs(state.J - j_old) / (h * std::abs(j_old));
            const double vdef = std::abs(state.volume - p.grid->area()) / p.grid->area();
            st.max_volume_defect = std::max(st.max_volume_defect, vdef);
            if (vdef >= kVolumeTol) ++st.volume_violations;
            st.max_eta_ratio = std::max(st.max_eta_ratio, state.eval.eta / st.eta0);
            st.min_eta = std::min(st.min_eta, state.eval.eta);
            if (!(state.eval.eta > 0.0) || state.eval.eta > st.eta0 * (1.0 + kEtaTol)) ++st.eta_bound_violations;
        }
        st.min_min_radius = std::min(st.min_min_radius, state.eval.min_radius);
        st.u_min = std::min(st.u_min, *std::min_element(state.u.begin(), state.u.end()));
        st.u_max = std::max(st.u_max, *std::max_element(state.u.begin(), state.u.end()));
        if (even) st.max_even_defect = std::max(st.max_even_defect, antipodal_defect(SupportField(p.grid, state.u)));

        if (cfg.monitor_every > 0 && st.accepted_steps % static_cast<std::size_t>(cfg.monitor_every) == 0) record(h);
        if (snap_every > 0 && st.accepted_steps % static_cast<std::size_t>(snap_every) == 0) snapshot();

        if (st.accepted_steps % kSpectralRefresh == 0) refresh_stability(8);

        // A step shortened to land on t_max says nothing about the step size.
        if (h < remaining) {
            const double fac = a.error_norm > 0.0 ? cfg.step.safety * std::pow(a.error_norm, -1.0 / 3.0) : 2.0;
            dt = std::min(cfg.step.dt_max, h * std::clamp(fac, 0.2, 2.0));
        }

        if (!normalized && *std::max_element(state.u.begin(), state.u.end()) > cfg.blowup_guard) {
            result.status = FlowStatus::BlowUpGuard;
            std::ostringstream msg;
            msg << "max u exceeded the blow-up guard " << cfg.blowup_guard << " at t = " << state.t;
            result.message = msg.str();
            break;
        }
    }

    if (normalized && (st.eta_bound_violations > 0 || st.volume_violations > 0) && result.status == FlowStatus::Converged) {
        result.status = FlowStatus::InvariantViolation;
        result.message = "eta or volume bound violated on an accepted step";
    }
    if (normalized && result.status == FlowStatus::Converged &&
        (!(st.u_min > 0.0) || !(st.u_max < 10.0 * st.u_max_initial) || !std::isfinite(st.max_grad_q))) {
        result.status = FlowStatus::InvariantViolation;
        result.message = "u or gradient bounds violated along the trace";
    }

    if (result.trace.records.back().t != state.t) record(last_dt);
    snapshot();
    result.t_final = state.t;
    result.u = SupportField(p.grid, state.u);
    if (normalized) {
        try {
            result.residual = stationarity_residual(result.u, psi, cfg.k, cfg.alpha);
        } catch (const std::domain_error&) {
            result.residual = ResidualReport{};
        }
    }
    return result;
}

}  // namespace

std::vector<std::string> validate(const FlowConfig& c) {
    std::vector<std::string> warnings;
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (c.grid_variant == GridVariant::FullS2 && c.n_dim != 2) fail("FullS2 grids require n_dim = 2");
    if (c.grid_variant == GridVariant::Axisym && (c.n_dim < 2 || c.n_dim > 8)) fail("Axisym grids require 2 <= n_dim <= 8");
    if (c.k < 1 || c.k > c.n_dim - 1) fail("k must satisfy 1 <= k <= n_dim - 1");
    if (!(c.alpha > 0.0) || !std::isfinite(c.alpha)) fail("alpha must be positive");
    if (c.alpha * c.k <= 1.0) warnings.push_back("alpha <= 1/k: outside the range of the convergence theorem");
    if (c.resolution.n_theta < 8 || (c.grid_variant == GridVariant::FullS2 && c.resolution.n_phi < 8)) fail("grid resolution must be at least 8");
    const auto& s = c.step;
    if (!(s.dt_min > 0.0) || !(s.dt_init >= s.dt_min) || !(s.dt_max >= s.dt_min)) fail("time step bounds must satisfy 0 < dt_min <= dt_init, dt_max");
    if (!(s.safety > 0.0 && s.safety < 1.0)) fail("safety factor must lie in (0, 1)");
    if (!(s.tol > 0.0)) fail("step tolerance must be positive");
    if (!(c.residual_tol > 0.0)) fail("residual_tol must be positive");
    if (!(c.t_max > 0.0)) fail("t_max must be positive");
    if (c.monitor_every < 1) fail("monitor_every must be >= 1");
    if (c.gamma < 0.0 || c.gamma >= 1.0) fail("gamma must lie in [0, 1)");
    if (!(c.blowup_guard > 0.0)) fail("blowup_guard must be positive");
    return warnings;
}

SupportField make_initial_field(const InitialShape& shape, const GridPtr& grid, int k) {
    std::vector<double> u(grid->size(), 1.0);
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double x = std::cos(grid->node_theta(i));
        for (const auto& [l, a] : shape.legendre) u[i] += a * boost::math::legendre_p(l, x);
    }
    if (shape.random_amplitude != 0.0) {
        std::mt19937_64 rng(shape.seed);
        std::uniform_real_distribution<double> coef(-1.0, 1.0);
        std::vector<double> pert(u.size(), 0.0);
        if (grid->variant() == GridVariant::FullS2) {
            // Random quadratic form plus a random quartic ridge: both even in x.
            double q[3][3];
            for (int a = 0; a < 3; ++a)
                for (int b = a; b < 3; ++b) q[a][b] = q[b][a] = coef(rng);
            double dir[3] = {coef(rng), coef(rng), coef(rng)};
            const double quartic = coef(rng);
            for (std::size_t i = 0; i < u.size(); ++i) {
                const auto x = grid->direction(i);
                double s = 0.0;
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b) s += q[a][b] * x[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(b)];
                const double proj = dir[0] * x[0] + dir[1] * x[1] + dir[2] * x[2];
                pert[i] = s + quartic * proj * proj * proj * proj;
            }
        } else {
            const double c2 = coef(rng);
            const double c4 = coef(rng);
            for (std::size_t i = 0; i < u.size(); ++i) {
                const double x = std::cos(grid->node_theta(i));
                pert[i] = c2 * boost::math::legendre_p(2, x) + c4 * boost::math::legendre_p(4, x);
            }
        }
        double scale = 0.0;
        for (double v : pert) scale = std::max(scale, std::abs(v));
        if (scale > 0.0)
            for (std::size_t i = 0; i < u.size(); ++i) u[i] += shape.random_amplitude * pert[i] / scale;
    }
    SupportField f = symmetrize_even(SupportField(grid, std::move(u)));
    const double lmin = min_radius(f);
    if (!(lmin > 0.0)) throw ConfigError("initial body is not uniformly convex (min radius " + std::to_string(lmin) + ")");
    return renormalize(f, k);
}

FlowSetup prepare(const FlowConfig& config) {
    FlowSetup s;
    for (const auto& w : validate(config)) {
        (void)w;
        s.flags.push_back("alpha_at_or_below_inverse_k");
    }
    s.grid = SphereGrid::build(config.grid_variant, config.n_dim, config.resolution);
    s.psi = config.sampled_psi_path.empty() ? eval_psi(config.psi, s.grid) : load_sampled_psi(s.grid, config.sampled_psi_path);

    s.psi_even_defect = check_even(s.psi);
    if (s.psi_even_defect > 1e-12 * s.psi.max()) {
        if (!config.allow_uneven) throw InadmissiblePsi("evenness defect " + std::to_string(s.psi_even_defect));
        s.flags.push_back("uneven_psi");
        s.flags.push_back("outside_theorem_hypotheses");
    }
    s.admissibility = check_admissible(s.psi, config.k, config.alpha);
    if (!s.admissibility.admissible) {
        if (!config.force) {
            std::ostringstream msg;
            msg << "psi is not admissible: min eigenvalue " << s.admissibility.min_eigenvalue;
            throw InadmissiblePsi(msg.str());
        }
        s.flags.push_back("inadmissible_psi");
        if (std::find(s.flags.begin(), s.flags.end(), "outside_theorem_hypotheses") == s.flags.end())
            s.flags.push_back("outside_theorem_hypotheses");
    }
    s.u0 = make_initial_field(config.u0, s.grid, config.k);
    return s;
}

double eta(const SupportField& u, const SupportField& psi, int k, double alpha) {
    const RadiiSpectrum s = radii_spectrum(u);
    if (!(min_radius(s) > 0.0)) throw std::domain_error("eta: u is not uniformly convex");
    const auto sk = sigma_k(s, k);
    std::vector<double> f(sk.size());
    for (std::size_t i = 0; i < sk.size(); ++i) f[i] = psi[i] * std::pow(sk[i], 1.0 + alpha);
    return quadrature(u.grid(), f) / u.grid().area();
}

double j_functional(const SupportField& u, const SupportField& psi, double alpha) {
    std::vector<double> f(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!(u[i] > 0.0)) throw std::domain_error("j_functional: u is not positive at node " + std::to_string(i));
        f[i] = std::pow(psi[i], -1.0 / alpha) * std::pow(u[i], 1.0 + 1.0 / alpha);
    }
    return quadrature(u.grid(), f);
}

SupportField normalized_rhs(const SupportField& u, const SupportField& psi, int k, double alpha) {
    const RadiiSpectrum s = radii_spectrum(u);
    const double lmin = min_radius(s);
    if (!(lmin > 0.0)) throw std::domain_error("normalized_rhs: min radius " + std::to_string(lmin) + " <= 0");
    const auto sk = sigma_k(s, k);
    std::vector<double> speed(sk.size()), integrand(sk.size());
    for (std::size_t i = 0; i < sk.size(); ++i) {
        speed[i] = psi[i] * std::pow(sk[i], alpha);
        integrand[i] = speed[i] * sk[i];
    }
    const double e = quadrature(u.grid(), integrand) / u.grid().area();
    for (std::size_t i = 0; i < sk.size(); ++i) speed[i] -= e * u[i];
    return SupportField(u.grid_ptr(), std::move(speed));
}

double renormalization_factor(const SupportField& u, int k) {
    const double v = mixed_volume_k1(u, k);
    if (!(v > 0.0)) throw std::domain_error("renormalize: mixed volume is not positive");
    return std::pow(u.grid().area() / v, 1.0 / (k + 1));
}

SupportField renormalize(const SupportField& u, int k) {
    const double lambda = renormalization_factor(u, k);
    std::vector<double> v(u.values().begin(), u.values().end());
    for (double& x : v) x *= lambda;
    return SupportField(u.grid_ptr(), std::move(v));
}

const char* FlowTrace::csv_header() { return "t,eta,J,volume,min_radius,u_min,u_max,grad_q,residual,dt"; }

void FlowTrace::write_csv(std::ostream& out) const {
    const auto old = out.precision(17);
    out << csv_header() << '\n';
    for (const auto& r : records)
        out << r.t << ',' << r.eta << ',' << r.J << ',' << r.volume << ',' << r.min_radius << ',' << r.u_min << ',' << r.u_max << ','
            << r.grad_q << ',' << r.residual << ',' << r.dt << '\n';
    out.precision(old);
}

std::string to_string(FlowStatus s) {
    switch (s) {
        case FlowStatus::Converged: return "converged";
        case FlowStatus::NotConverged: return "not_converged";
        case FlowStatus::InvariantViolation: return "invariant_violation";
        case FlowStatus::StepUnderflow: return "step_underflow";
        case FlowStatus::BlowUpGuard: return "blowup_guard";
        case FlowStatus::ReachedTMax: return "reached_t_max";
    }
    return "?";
}

FlowResult evolve(const FlowConfig& config) {
    FlowSetup setup = prepare(config);
    FlowResult r = evolve(setup.u0, setup.psi, config);
    for (const auto& f : setup.flags)
        if (std::find(r.flags.begin(), r.flags.end(), f) == r.flags.end()) r.flags.push_back(f);
    return r;
}

FlowResult evolve(const SupportField& u0, const SupportField& psi, const FlowConfig& config) { return run(u0, psi, config, true); }

FlowResult evolve_unnormalized(const SupportField& u0, const SupportField& psi, const FlowConfig& config) {
    return run(u0, psi, config, false);
}

std::vector<Snapshot> rescale_raw_to_normalized(const std::vector<Snapshot>& raw, int k, double alpha) {
    std::vector<Snapshot> out;
    out.reserve(raw.size());
    double tau = 0.0;
    double prev_rate = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double lambda = renormalization_factor(raw[i].u, k);
        const double rate = std::pow(lambda, 1.0 - k * alpha);
        if (i > 0) {
            const double dt = raw[i].t - raw[i - 1].t;
            const double next = tau + 0.5 * dt * (rate + prev_rate);
            if (!(next > tau)) throw std::runtime_error("rescale_raw_to_normalized: tau is not increasing at sample " + std::to_string(i));
            tau = next;
        }
        prev_rate = rate;
        std::vector<double> v(raw[i].u.values().begin(), raw[i].u.values().end());
        for (double& x : v) x *= lambda;
        out.push_back(Snapshot{tau, SupportField(raw[i].u.grid_ptr(), std::move(v))});
    }
    return out;
}

SupportField interpolate(const std::vector<Snapshot>& s, double t) {
    if (s.empty() || t < s.front().t || t > s.back().t) throw std::out_of_range("interpolate: time outside snapshot range");
    auto hi = std::lower_bound(s.begin(), s.end(), t, [](const Snapshot& a, double x) { return a.t < x; });
    if (hi == s.begin()) return hi->u;
    auto lo = hi - 1;
    const double w = (t - lo->t) / (hi->t - lo->t);
    std::vector<double> v(lo->u.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (1.0 - w) * lo->u[i] + w * hi->u[i];
    return SupportField(lo->u.grid_ptr(), std::move(v));
}

double sup_distance(const SupportField& a, const SupportField& b) {
    if (a.size() != b.size()) throw std::invalid_argument("sup_distance: size mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace cmflow
