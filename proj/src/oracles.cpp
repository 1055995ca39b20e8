#include "cmflow/oracles.hpp"

#include "cmflow/convex_calculus.hpp"

#include <boost/math/special_functions/legendre.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cmflow {

double SphereODE::rate() const {
    if (n_dim < 1 || k < 1 || k > n_dim) throw std::invalid_argument("SphereODE: need 1 <= k <= n");
    if (!(alpha > 0.0)) throw std::invalid_argument("SphereODE: alpha must be positive");
    if (!(r0 > 0.0)) throw std::invalid_argument("SphereODE: r0 must be positive");
    return std::pow(binomial(n_dim, k), alpha);
}

std::optional<double> SphereODE::blowup_time() const {
    const double c = rate();
    const double ka = k * alpha;
    if (ka <= 1.0) return std::nullopt;
    return std::pow(r0, 1.0 - ka) / ((ka - 1.0) * c);
}

std::variant<double, BlowUp> sphere_radius(double t, const SphereODE& ode) {
    if (!(t >= 0.0)) throw std::invalid_argument("sphere_radius: t must be nonnegative");
    const double c = ode.rate();
    if (t == 0.0) return ode.r0;
    const double ka = ode.k * ode.alpha;
    if (ka == 1.0) return ode.r0 * std::exp(c * t);
    if (const auto ts = ode.blowup_time(); ts && t >= *ts) return BlowUp{*ts};
    return std::pow(std::pow(ode.r0, 1.0 - ka) + (1.0 - ka) * c * t, 1.0 / (1.0 - ka));
}

double stationary_radius(int n_dim, int k) {
    if (k < 1 || k > n_dim - 1) throw std::invalid_argument("stationary_radius: need 1 <= k <= n - 1");
    return std::pow(binomial(n_dim, k), -1.0 / (k + 1));
}

FdStudy fd_check(const std::function<double(double)>& error_at, std::span<const double> h) {
    if (h.size() < 2) throw std::invalid_argument("fd_check: need at least two step sizes");
    FdStudy s;
    s.h.assign(h.begin(), h.end());
    s.convergent = true;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (i > 0 && !(h[i] < h[i - 1])) throw std::invalid_argument("fd_check: h must be decreasing");
        s.errors.push_back(std::abs(error_at(h[i])));
    }
    for (std::size_t i = 0; i + 1 < h.size(); ++i) {
        if (!(s.errors[i + 1] < s.errors[i])) s.convergent = false;
        s.orders.push_back(std::log(s.errors[i] / s.errors[i + 1]) / std::log(h[i] / h[i + 1]));
    }
    s.observed_order = s.orders.back();
    s.min_error = *std::min_element(s.errors.begin(), s.errors.end());
    return s;
}

double sigma_gradient_fd_error(std::span<const double> lambda, int k, double h) {
    const std::vector<double> g = sigma_k_gradient(lambda, k);
    std::vector<double> l(lambda.begin(), lambda.end());
    double err = 0.0;
    for (std::size_t i = 0; i < l.size(); ++i) {
        const double x = l[i];
        l[i] = x + h;
        const double up = elementary_symmetric(l, k);
        l[i] = x - h;
        const double down = elementary_symmetric(l, k);
        l[i] = x;
        const double fd = (up - down) / (2.0 * h);
        err = std::max(err, std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])));
    }
    return err;
}

double LegendreProfile::value(double theta) const {
    return c0 + epsilon * boost::math::legendre_p(degree, std::cos(theta));
}

// d/dtheta P_l(cos theta) = -sin(theta) P_l'(cos theta)
double LegendreProfile::d1(double theta) const {
    if (degree == 0) return 0.0;
    return -epsilon * std::sin(theta) * boost::math::legendre_p_prime(degree, std::cos(theta));
}

// P_l(cos theta) solves f'' + cot(theta) f' = -l(l+1) f.
double LegendreProfile::d2(double theta) const {
    const double p = boost::math::legendre_p(degree, std::cos(theta));
    const double dp = degree == 0 ? 0.0 : -std::sin(theta) * boost::math::legendre_p_prime(degree, std::cos(theta));
    return epsilon * (-degree * (degree + 1.0) * p - std::cos(theta) / std::sin(theta) * dp);
}

double LegendreProfile::tangential(double theta) const { return std::cos(theta) / std::sin(theta) * d1(theta) + value(theta); }

double radii_error(const GridPtr& g, const LegendreProfile& profile) {
    const SphereGrid& grid = *g;
    const SupportField u = sample(g, [&](double theta, double) { return profile.value(theta); });
    const RadiiSpectrum s = radii_spectrum(u);
    double err = 0.0;
    double scale = 1.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double th = grid.node_theta(i);
        double r = profile.radial(th);
        double t = profile.tangential(th);
        scale = std::max({scale, std::abs(r), std::abs(t)});
        if (grid.variant() == GridVariant::FullS2 && r < t) std::swap(r, t);
        err = std::max({err, std::abs(s.lambda_1[i] - r), std::abs(s.lambda_2[i] - t)});
    }
    return err / scale;
}

FdStudy hessian_refinement(GridVariant variant, int n_dim, const LegendreProfile& profile, std::span<const int> sizes) {
    std::vector<double> h;
    for (int n : sizes) h.push_back(std::numbers::pi / n);
    return fd_check(
        [&](double step) {
            const int n = static_cast<int>(std::lround(std::numbers::pi / step));
            const int n_phi = variant == GridVariant::FullS2 ? 2 * n : 1;
            return radii_error(SphereGrid::build(variant, n_dim, {n, n_phi}), profile);
        },
        h);
}

}  // namespace cmflow
