#pragma once

#include "cmflow/flow.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cmflow::app {

/// Process exit codes.
enum ExitCode : int {
    kOk = 0,
    kCheckFailed = 1,  // verify found a failing check; unexpected runtime error
    kInadmissible = 2,
    kParseError = 3,
    kNotConverged = 4,
    kInvariantViolation = 5,
};

struct OutputOptions {
    std::string dir = "cmflow_out";
    bool trace_csv = true;
    bool summary_json = true;
    bool mesh_obj = false;
    bool mesh_ply = false;
    bool snapshots = false;  // one field file per snapshot under dir/snapshots
};

struct SweepAxes {
    std::vector<double> alpha;
    std::vector<double> epsilon;  // replaces the psi epsilon parameter
    std::vector<int> resolution;  // n_theta; FullS2 uses n_phi = 2 n_theta
    std::size_t cap = 256;

    std::size_t size() const;
};

struct RunConfig {
    FlowConfig flow;
    OutputOptions output;
    SweepAxes sweep;
    std::string psi_family = "Constant";
    std::string psi_params;
};

/**
 * INI-style run configuration. Top-level keys: n_dim, k, alpha, seed.
 * Sections: [psi] family, params, sampled; [grid] variant, resolution
 * ("64x128" or "256"); [u0] legendre ("2:0.1, 4:0.02"), random_amplitude;
 * [flow] residual_tol, t_max, dt_init, dt_min, dt_max, tol, safety,
 * monitor_every, gamma, snapshot_every, max_steps, blowup_guard,
 * stability_limit;
 * [output] dir, trace_csv, summary_json, mesh_obj, mesh_ply, snapshots;
 * [sweep] alpha, epsilon, resolution, cap. Unknown keys are errors.
 *
 * Throws ConfigError.
 */
RunConfig parse_config(std::istream& in, const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);

/// Command-line overrides shared by every subcommand.
struct Overrides {
    std::string out_dir;
    bool has_seed = false;
    std::uint64_t seed = 0;
    bool force = false;
    bool allow_uneven = false;
};

void apply(const Overrides& o, RunConfig& cfg);

int cmd_check_psi(const RunConfig& cfg, std::ostream& out);
int cmd_evolve(const RunConfig& cfg, std::ostream& out);
int cmd_evolve_raw(const RunConfig& cfg, std::ostream& out);
/// `threads` = 0 reads CMFLOW_THREADS (default: hardware concurrency).
int cmd_sweep(const RunConfig& cfg, std::ostream& out, unsigned threads = 0, bool ignore_cap = false);
/// Mesh of the final field of a previous evolve run (`field_path`), or of u0
/// when the path is empty.
int cmd_export_mesh(const RunConfig& cfg, const std::string& field_path, std::ostream& out);

struct VerifyOptions {
    int resolution = 64;
    double weight_scale = 1.0;  // != 1 corrupts the quadrature weights
};

struct CheckRow {
    std::string name;
    bool pass = false;
    std::string detail;
};

std::vector<CheckRow> run_verify(const VerifyOptions& options);
int cmd_verify(const VerifyOptions& options, std::ostream& out);

/// JSON summary of a finished run.
std::string summary_json(const RunConfig& cfg, const FlowResult& result, const AdmissibilityReport& adm);

/// Maps a flow status to the process exit code.
int exit_code(FlowStatus status, bool normalized);

unsigned thread_budget(unsigned requested);

}  // namespace cmflow::app
