#include "cmflow/residual.hpp"

#include "cmflow/convex_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cmflow {

ResidualReport stationarity_residual(const SupportField& u, const SupportField& psi, int k, double alpha) {
    const SphereGrid& g = u.grid();
    const auto sk = sigma_k(radii_spectrum(u), k);
    const std::size_t n = g.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!(sk[i] > 0.0)) throw std::domain_error("stationarity_residual: sigma_k is not positive at node " + std::to_string(i));
        if (!(u[i] > 0.0)) throw std::domain_error("stationarity_residual: u is not positive at node " + std::to_string(i));
    }

    ResidualReport r;
    r.p = 1.0 + 1.0 / alpha;
    std::vector<double> rho(n), q(n), dsigma(n), rho_ds(n), q_ds(n);
    for (std::size_t i = 0; i < n; ++i) {
        rho[i] = psi[i] * std::pow(sk[i], alpha) / u[i];
        const double psi_tilde = std::pow(psi[i], -1.0 / alpha);
        q[i] = std::pow(u[i], 1.0 - r.p) * sk[i] / psi_tilde;
        dsigma[i] = u[i] * sk[i];
        rho_ds[i] = rho[i] * dsigma[i];
        q_ds[i] = q[i] * dsigma[i];
    }
    const double mass = quadrature(g, dsigma);
    r.rho_hat_mean = quadrature(g, rho_ds) / mass;
    r.c_lp = quadrature(g, q_ds) / mass;
    for (std::size_t i = 0; i < n; ++i) {
        r.rho_hat_relspread = std::max(r.rho_hat_relspread, std::abs(rho[i] / r.rho_hat_mean - 1.0));
        r.sup_residual = std::max(r.sup_residual, std::abs(q[i] / r.c_lp - 1.0));
    }
    return r;
}

PcRelation cross_check_pc_relation(double alpha, int k) {
    if (!(alpha > 0.0)) throw std::invalid_argument("cross_check_pc_relation: alpha must be positive");
    PcRelation r;
    r.p = 1.0 + 1.0 / alpha;
    r.exponent_psi = 1.0 / (1.0 + k * alpha);
    r.exponent_tilde = -1.0 / (k + r.p - 1.0);
    r.exponent_via_tilde = (-1.0 / alpha) * r.exponent_tilde;
    r.p_in_window = r.p > 1.0 && r.p < k + 1.0;
    if (std::abs(r.exponent_via_tilde - r.exponent_psi) > 1e-14 * std::abs(r.exponent_psi))
        throw std::logic_error("cross_check_pc_relation: exponent forms disagree");
    return r;
}

}  // namespace cmflow
