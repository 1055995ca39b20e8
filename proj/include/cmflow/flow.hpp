#pragma once

#include "cmflow/psi.hpp"
#include "cmflow/residual.hpp"
#include "cmflow/sphere_grid.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cmflow {

/// u0 = 1 + sum_l a_l P_l(cos theta) + random_amplitude * (random even
/// perturbation), symmetrized and renormalized before use.
struct InitialShape {
    std::vector<std::pair<int, double>> legendre;
    double random_amplitude = 0.0;
    std::uint64_t seed = 0;
};

struct StepControl {
    double dt_init = 1e-3;
    double dt_min = 1e-12;
    double dt_max = 0.05;
    double safety = 0.9;
    double tol = 1e-7;  // embedded error tolerance (absolute + relative)
    /// Cap dt inside the real stability interval of the pair, using a power
    /// iteration estimate of the rhs Jacobian's spectral radius. Without it
    /// the error controller alone keeps stiff modes at the tolerance level.
    bool stability_limit = true;
};

struct FlowConfig {
    int n_dim = 2;
    int k = 1;
    double alpha = 1.0;
    PsiSpec psi;
    GridVariant grid_variant = GridVariant::FullS2;
    SphereGrid::Resolution resolution{64, 128};
    InitialShape u0;
    StepControl step;
    double residual_tol = 1e-7;
    double t_max = 50.0;
    int monitor_every = 50;
    double gamma = 0.0;  // exponent of the gradient monitor; 0 selects 1/(2n+1)
    int snapshot_every = 0;
    double blowup_guard = 1e6;  // unnormalized flow stops once max u exceeds this
    std::size_t max_steps = 50'000'000;
    bool force = false;         // run with an inadmissible psi
    bool allow_uneven = false;  // run with a non-even psi
    std::string sampled_psi_path;  // optional: replaces the closed-form psi

    double gradient_gamma() const { return gamma > 0.0 ? gamma : 1.0 / (2 * n_dim + 1); }
};

/// Thrown when a configuration cannot be run at all.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when psi fails the evenness or admissibility gate.
class InadmissiblePsi : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Checks ranges; returns warnings (e.g. alpha <= 1/k).
std::vector<std::string> validate(const FlowConfig& config);

SupportField make_initial_field(const InitialShape& shape, const GridPtr& grid, int k);

/// Grid, psi samples and u0 built from a config, with the psi gate applied.
struct FlowSetup {
    GridPtr grid;
    SupportField psi;
    SupportField u0;
    AdmissibilityReport admissibility;
    double psi_even_defect = 0.0;
    std::vector<std::string> flags;
};

FlowSetup prepare(const FlowConfig& config);

/// eta = average over S^n of psi sigma_k^{1+alpha}.
double eta(const SupportField& u, const SupportField& psi, int k, double alpha);

/// J(u) = integral of psi^{-1/alpha} u^{1+1/alpha}.
double j_functional(const SupportField& u, const SupportField& psi, double alpha);

/// psi sigma_k(W_u)^alpha - eta u.
SupportField normalized_rhs(const SupportField& u, const SupportField& psi, int k, double alpha);

/// (|S^n| / integral u sigma_k)^{1/(k+1)}
double renormalization_factor(const SupportField& u, int k);
SupportField renormalize(const SupportField& u, int k);

struct TraceRecord {
    double t = 0.0;
    double eta = 0.0;
    double J = 0.0;
    double volume = 0.0;
    double min_radius = 0.0;
    double u_min = 0.0;
    double u_max = 0.0;
    double grad_q = 0.0;
    double residual = 0.0;
    double dt = 0.0;
};

struct FlowTrace {
    std::vector<TraceRecord> records;
    static const char* csv_header();
    void write_csv(std::ostream& out) const;
};

/// Per-run invariant bookkeeping over every accepted step.
struct RunStats {
    std::size_t accepted_steps = 0;
    std::size_t rejected_error = 0;
    std::size_t rejected_convexity = 0;
    std::size_t rejected_monotonicity = 0;
    std::size_t rejected_rhs = 0;
    double eta0 = 0.0;
    double max_eta_ratio = 0.0;  // max eta(t) / eta(0)
    double min_eta = 0.0;
    double max_volume_defect = 0.0;
    double max_rel_j_increase = 0.0;  // max (J' - J) / |J| over accepted steps; <= 0 when J decreases
    double min_min_radius = 0.0;
    double max_even_defect = 0.0;
    double final_dj_rate = 0.0;  // |Delta J| / (dt |J|) of the last accepted step
    double u_min = 0.0;          // over all accepted states
    double u_max = 0.0;
    double u_max_initial = 0.0;
    double max_grad_q = 0.0;     // over trace records
    std::size_t eta_bound_violations = 0;
    std::size_t volume_violations = 0;
};

enum class FlowStatus { Converged, NotConverged, InvariantViolation, StepUnderflow, BlowUpGuard, ReachedTMax };

std::string to_string(FlowStatus s);

struct Snapshot {
    double t = 0.0;
    SupportField u;
};

struct FlowResult {
    FlowStatus status = FlowStatus::NotConverged;
    std::string message;
    SupportField u;
    FlowTrace trace;
    RunStats stats;
    ResidualReport residual;
    std::vector<Snapshot> snapshots;
    std::vector<std::string> flags;
    double t_final = 0.0;
};

/// Normalized flow d_t u = psi sigma_k^alpha - eta u, renormalized and
/// symmetrized after every step, until the stationarity residual drops below
/// residual_tol or t reaches t_max.
FlowResult evolve(const FlowConfig& config);
FlowResult evolve(const SupportField& u0, const SupportField& psi, const FlowConfig& config);

/// Unnormalized flow d_t u = psi sigma_k^alpha. Snapshots are taken every
/// `snapshot_every` accepted steps (every step when 0) and at the end. Stops at
/// t_max (ReachedTMax) or when max u exceeds blowup_guard (BlowUpGuard).
FlowResult evolve_unnormalized(const SupportField& u0, const SupportField& psi, const FlowConfig& config);

/// Spatial renormalization of each raw snapshot plus the time change
/// tau = integral of (|S^n| / V_{k+1})^{(1 - k alpha)/(k+1)} dt (trapezoidal).
/// The returned snapshots carry tau in `t`. Throws if tau is not increasing.
std::vector<Snapshot> rescale_raw_to_normalized(const std::vector<Snapshot>& raw, int k, double alpha);

/// Linear interpolation in time between snapshots; t must lie in their range.
SupportField interpolate(const std::vector<Snapshot>& snapshots, double t);

/// sup |a - b|
double sup_distance(const SupportField& a, const SupportField& b);

}  // namespace cmflow
