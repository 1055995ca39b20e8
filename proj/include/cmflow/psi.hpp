#pragma once

#include "cmflow/sphere_grid.hpp"

#include <string>

namespace cmflow {

enum class PsiFamily { Constant, EvenHarmonic, PowerOfBase };

std::string to_string(PsiFamily f);
PsiFamily parse_psi_family(const std::string& name);

/**
 * Closed-form anisotropy psi, rotationally symmetric about the polar axis.
 *
 *   Constant:      psi = scale
 *   EvenHarmonic:  psi = scale * (1 + epsilon P_l(cos theta)),  l even
 *   PowerOfBase:   psi = scale * (1 + epsilon P_l(cos theta))^exponent
 *
 * Construction validates parameter ranges and strict positivity on a fine
 * certification scan in theta.
 */
class PsiSpec {
public:
    static PsiSpec constant(double value = 1.0);
    static PsiSpec even_harmonic(double epsilon, int degree, double scale = 1.0);
    static PsiSpec power_of_base(double epsilon, int degree, double exponent, double scale = 1.0);

    /// Parses the flat key/value block used in run configs, e.g.
    /// "epsilon=0.1; degree=2; exponent=3". Unknown keys are rejected.
    static PsiSpec parse(const std::string& family, const std::string& params);

    PsiFamily family() const { return family_; }
    double scale() const { return scale_; }
    double epsilon() const { return epsilon_; }
    int degree() const { return degree_; }
    double exponent() const { return exponent_; }

    double operator()(double theta) const;
    /// Canonical parameter block; parse(to_string(family()), params_text()) round-trips.
    std::string params_text() const;

private:
    void certify() const;

    PsiFamily family_ = PsiFamily::Constant;
    double scale_ = 1.0;
    double epsilon_ = 0.0;
    int degree_ = 0;
    double exponent_ = 1.0;
};

/// Samples psi on the grid; throws if any sample is not strictly positive.
SupportField eval_psi(const PsiSpec& spec, const GridPtr& grid);

/// Loads a sampled psi (one value per node, latitude-major). Validation only:
/// finite and strictly positive. No smoothing is applied.
SupportField load_sampled_psi(const GridPtr& grid, const std::string& path);

/// max_i |psi[i] - psi[antipode[i]]|
double check_even(const SupportField& psi);

/// Minimum eigenvalue required for admissibility (strict positivity margin).
inline constexpr double kAdmissibilityMargin = 1e-8;

struct AdmissibilityReport {
    double min_eigenvalue = 0.0;        // of W_f, f = psi^{1/(1+k alpha)}
    double min_eigenvalue_tilde = 0.0;  // of W_g, g = psi_tilde^{-1/(k+p-1)}, psi_tilde = psi^{-1/alpha}
    double p = 0.0;
    bool admissible = false;
    bool forms_agree = false;           // both forms on the same side of the margin
    bool alpha_in_theorem_range = false;  // alpha > 1/k
};

/// Admissibility of psi for the pair (k, alpha): W of psi^{1/(1+k alpha)}
/// must be positive definite.
AdmissibilityReport check_admissible(const SupportField& psi, int k, double alpha);

}  // namespace cmflow
