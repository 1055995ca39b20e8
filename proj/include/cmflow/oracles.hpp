#pragma once

#include "cmflow/sphere_grid.hpp"

#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace cmflow {

/// Round sphere of radius r evolving by dr/dt = C(n,k)^alpha r^{k alpha}.
struct SphereODE {
    int n_dim = 2;
    int k = 1;
    double alpha = 1.0;
    double r0 = 1.0;

    /// C(n,k)^alpha; throws on invalid parameters.
    double rate() const;
    /// Finite when k alpha > 1.
    std::optional<double> blowup_time() const;
};

struct BlowUp {
    double t_star = 0.0;
};

std::variant<double, BlowUp> sphere_radius(double t, const SphereODE& ode);

/// Radius of the round sphere with integral u sigma_k = |S^n|: C(n,k)^{-1/(k+1)}.
double stationary_radius(int n_dim, int k);

struct FdStudy {
    std::vector<double> h;
    std::vector<double> errors;
    std::vector<double> orders;  // between consecutive entries of h
    double observed_order = 0.0;  // last entry of `orders`
    double min_error = 0.0;
    bool convergent = false;  // errors strictly decreasing along h
};

/// Evaluates error_at(h) over a decreasing h sequence and estimates the order
/// log(e_i / e_{i+1}) / log(h_i / h_{i+1}).
FdStudy fd_check(const std::function<double(double)>& error_at, std::span<const double> h);

/// Max relative error of sigma_k_gradient against central differences of
/// sigma_k with step h (per eigenvalue, scaled by max(1, |gradient|)).
double sigma_gradient_fd_error(std::span<const double> lambda, int k, double h);

/// f(theta) = c0 + epsilon P_l(cos theta) with exact theta derivatives.
struct LegendreProfile {
    double c0 = 1.0;
    double epsilon = 0.0;
    int degree = 0;

    double value(double theta) const;
    double d1(double theta) const;
    double d2(double theta) const;
    /// f'' + f and cot(theta) f' + f
    double radial(double theta) const { return d2(theta) + value(theta); }
    double tangential(double theta) const;
};

/// Max deviation of the discrete principal radii of `profile` from the exact
/// ones, divided by max(1, max |exact radius|).
double radii_error(const GridPtr& grid, const LegendreProfile& profile);

/// Hessian refinement study: radii_error on grids of the given sizes
/// (n_theta = size, n_phi = 2 size on FullS2), with h = pi / size.
FdStudy hessian_refinement(GridVariant variant, int n_dim, const LegendreProfile& profile, std::span<const int> sizes);

}  // namespace cmflow
