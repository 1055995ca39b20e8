#pragma once

#include "cmflow/sphere_grid.hpp"

namespace cmflow {

/// Certificate for the stationary equation psi u^{-1} sigma_k^alpha = const and
/// its L^p Christoffel-Minkowski form u^{1-p} sigma_k = c psi_tilde with
/// p = 1 + 1/alpha and psi_tilde = psi^{-1/alpha}.
struct ResidualReport {
    double rho_hat_mean = 0.0;       // sigma-measure mean of psi sigma_k^alpha / u
    double rho_hat_relspread = 0.0;  // sup |rho_hat / mean - 1|
    double p = 0.0;
    double c_lp = 0.0;               // sigma-measure mean of u^{1-p} sigma_k / psi_tilde
    double sup_residual = 0.0;       // sup |u^{1-p} sigma_k - c psi_tilde| / (c psi_tilde)
};

/// The mean uses the measure d sigma = u sigma_k d mu.
ResidualReport stationarity_residual(const SupportField& u, const SupportField& psi, int k, double alpha);

struct PcRelation {
    double p = 0.0;
    double exponent_psi = 0.0;    // 1 / (1 + k alpha), applied to psi
    double exponent_tilde = 0.0;  // -1 / (k + p - 1), applied to psi_tilde
    /// Exponent of psi obtained through psi_tilde: (-1/alpha) * exponent_tilde.
    double exponent_via_tilde = 0.0;
    bool p_in_window = false;     // 1 < p < k + 1
};

/// Checks that both admissibility exponents describe the same power of psi;
/// throws std::logic_error if they disagree beyond roundoff.
PcRelation cross_check_pc_relation(double alpha, int k);

}  // namespace cmflow
