#include "cmflow/app.hpp"

#include "cmflow/convex_calculus.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

namespace cmflow::app {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string grid_text(const FlowConfig& f) {
    std::ostringstream s;
    s << to_string(f.grid_variant) << ' ' << f.resolution.n_theta;
    if (f.grid_variant == GridVariant::FullS2) s << 'x' << f.resolution.n_phi;
    return s.str();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory '" + dir + "'");
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
    return out;
}

void write_mesh(const SupportField& u, const OutputOptions& o, std::ostream& log) {
    if (u.grid().variant() != GridVariant::FullS2) {
        log << "mesh export skipped: needs a FullS2 grid\n";
        return;
    }
    const EmbeddedBody body = embed(u);
    if (o.mesh_obj) {
        auto out = open_out(fs::path(o.dir) / "mesh.obj");
        write_obj(body, u.grid(), out);
    }
    if (o.mesh_ply) {
        auto out = open_out(fs::path(o.dir) / "mesh.ply");
        write_ply(body, u.grid(), out);
    }
}

void write_snapshots(const std::vector<Snapshot>& snaps, const std::string& dir, const std::string& name) {
    const fs::path sd = fs::path(dir) / name;
    ensure_dir(sd.string());
    auto index = open_out(sd / "index.csv");
    index << std::setprecision(17) << "index,t,file\n";
    for (std::size_t i = 0; i < snaps.size(); ++i) {
        std::ostringstream file;
        file << "snap_" << std::setw(5) << std::setfill('0') << i << ".txt";
        save_field(snaps[i].u, (sd / file.str()).string());
        index << i << ',' << snaps[i].t << ',' << file.str() << '\n';
    }
}

void write_run_artifacts(const RunConfig& cfg, const FlowResult& r, const AdmissibilityReport& adm, std::ostream& log) {
    ensure_dir(cfg.output.dir);
    const fs::path dir(cfg.output.dir);
    if (cfg.output.trace_csv) {
        auto out = open_out(dir / "trace.csv");
        r.trace.write_csv(out);
    }
    if (cfg.output.summary_json) {
        auto out = open_out(dir / "summary.json");
        out << summary_json(cfg, r, adm) << '\n';
    }
    save_field(r.u, (dir / "u_final.txt").string());
    if (cfg.output.snapshots && !r.snapshots.empty()) write_snapshots(r.snapshots, cfg.output.dir, "snapshots");
    if (cfg.output.mesh_obj || cfg.output.mesh_ply) {
        try {
            write_mesh(r.u, cfg.output, log);
        } catch (const std::domain_error& e) {
            log << "mesh export skipped: " << e.what() << '\n';
        }
    }
}

PsiSpec with_epsilon(const PsiSpec& s, double eps) {
    switch (s.family()) {
        case PsiFamily::EvenHarmonic: return PsiSpec::even_harmonic(eps, s.degree(), s.scale());
        case PsiFamily::PowerOfBase: return PsiSpec::power_of_base(eps, s.degree(), s.exponent(), s.scale());
        case PsiFamily::Constant: break;
    }
    throw ConfigError("epsilon sweep needs a non-constant psi family");
}

}  // namespace

int exit_code(FlowStatus status, bool normalized) {
    switch (status) {
        case FlowStatus::Converged: return kOk;
        case FlowStatus::ReachedTMax:
        case FlowStatus::BlowUpGuard: return normalized ? kNotConverged : kOk;
        case FlowStatus::InvariantViolation: return kInvariantViolation;
        case FlowStatus::NotConverged:
        case FlowStatus::StepUnderflow: return kNotConverged;
    }
    return kCheckFailed;
}

unsigned thread_budget(unsigned requested) {
    unsigned n = requested > 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("CMFLOW_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && cap > 0) n = std::min(n, static_cast<unsigned>(cap));
    }
    return n;
}

std::string summary_json(const RunConfig& cfg, const FlowResult& r, const AdmissibilityReport& adm) {
    const FlowConfig& f = cfg.flow;
    const RunStats& s = r.stats;
    json j;
    j["status"] = to_string(r.status);
    j["converged"] = r.status == FlowStatus::Converged;
    j["message"] = r.message;
    j["flags"] = r.flags;
    j["t_final"] = number(r.t_final);
    j["config"] = {
        {"n_dim", f.n_dim},
        {"k", f.k},
        {"alpha", f.alpha},
        {"psi", {{"family", to_string(f.psi.family())}, {"params", f.psi.params_text()}, {"sampled", f.sampled_psi_path}}},
        {"grid", {{"variant", to_string(f.grid_variant)}, {"n_theta", f.resolution.n_theta}, {"n_phi", f.resolution.n_phi}}},
        {"seed", f.u0.seed},
        {"residual_tol", f.residual_tol},
        {"t_max", f.t_max},
        {"step_tol", f.step.tol},
    };
    j["steps"] = {
        {"accepted", s.accepted_steps},
        {"rejected_error", s.rejected_error},
        {"rejected_convexity", s.rejected_convexity},
        {"rejected_monotonicity", s.rejected_monotonicity},
        {"rejected_rhs", s.rejected_rhs},
    };
    j["invariants"] = {
        {"eta0", number(s.eta0)},
        {"max_eta_ratio", number(s.max_eta_ratio)},
        {"min_eta", number(s.min_eta)},
        {"max_volume_defect", number(s.max_volume_defect)},
        {"max_rel_j_increase", number(s.max_rel_j_increase)},
        {"final_dj_rate", number(s.final_dj_rate)},
        {"min_min_radius", number(s.min_min_radius)},
        {"max_even_defect", number(s.max_even_defect)},
        {"max_grad_q", number(s.max_grad_q)},
        {"eta_bound_violations", s.eta_bound_violations},
        {"volume_violations", s.volume_violations},
    };
    j["residual"] = {
        {"rho_hat_mean", number(r.residual.rho_hat_mean)},
        {"rho_hat_relspread", number(r.residual.rho_hat_relspread)},
        {"p", number(r.residual.p)},
        {"c_lp", number(r.residual.c_lp)},
        {"sup_residual", number(r.residual.sup_residual)},
    };
    j["admissibility"] = {
        {"min_eigenvalue", number(adm.min_eigenvalue)},
        {"min_eigenvalue_tilde", number(adm.min_eigenvalue_tilde)},
        {"admissible", adm.admissible},
        {"forms_agree", adm.forms_agree},
        {"alpha_in_theorem_range", adm.alpha_in_theorem_range},
    };
    if (r.u.size() > 0) j["u"] = {{"min", number(r.u.min())}, {"max", number(r.u.max())}};
    return j.dump(2);
}

int cmd_check_psi(const RunConfig& cfg, std::ostream& out) {
    const FlowConfig& f = cfg.flow;
    const GridPtr grid = SphereGrid::build(f.grid_variant, f.n_dim, f.resolution);
    const SupportField psi = f.sampled_psi_path.empty() ? eval_psi(f.psi, grid) : load_sampled_psi(grid, f.sampled_psi_path);
    const double defect = check_even(psi);
    const bool even = defect <= 1e-12 * psi.max();
    const AdmissibilityReport adm = check_admissible(psi, f.k, f.alpha);

    out << std::setprecision(10);
    out << "psi family:        " << (f.sampled_psi_path.empty() ? to_string(f.psi.family()) : "sampled") << '\n';
    out << "psi params:        " << (f.sampled_psi_path.empty() ? f.psi.params_text() : f.sampled_psi_path) << '\n';
    out << "grid:              " << grid_text(f) << '\n';
    out << "k, alpha, p:       " << f.k << ", " << f.alpha << ", " << adm.p << '\n';
    out << "evenness defect:   " << defect << (even ? "" : "  (psi is not even)") << '\n';
    out << "min eigenvalue:    " << adm.min_eigenvalue << '\n';
    out << "min eigenvalue (psi_tilde form): " << adm.min_eigenvalue_tilde << (adm.forms_agree ? "" : "  (forms disagree)") << '\n';
    if (!adm.alpha_in_theorem_range) out << "warning: alpha <= 1/k\n";
    const bool ok = even && adm.admissible;
    out << "verdict:           " << (ok ? "admissible" : (!even ? "rejected (uneven)" : "rejected (inadmissible)")) << '\n';
    return ok ? kOk : kInadmissible;
}

int cmd_evolve(const RunConfig& cfg, std::ostream& out) {
    FlowSetup setup = prepare(cfg.flow);
    FlowResult r = evolve(setup.u0, setup.psi, cfg.flow);
    for (const auto& fl : setup.flags)
        if (std::find(r.flags.begin(), r.flags.end(), fl) == r.flags.end()) r.flags.push_back(fl);
    write_run_artifacts(cfg, r, setup.admissibility, out);

    out << std::setprecision(10);
    out << "status:      " << to_string(r.status) << (r.message.empty() ? "" : " (" + r.message + ")") << '\n';
    out << "t, steps:    " << r.t_final << ", " << r.stats.accepted_steps << '\n';
    out << "relspread:   " << r.residual.rho_hat_relspread << '\n';
    out << "sup residual:" << ' ' << r.residual.sup_residual << "  c = " << r.residual.c_lp << '\n';
    out << "u range:     [" << r.u.min() << ", " << r.u.max() << "]\n";
    for (const auto& fl : r.flags) out << "flag:        " << fl << '\n';
    out << "artifacts:   " << cfg.output.dir << '\n';
    return exit_code(r.status, true);
}

int cmd_evolve_raw(const RunConfig& cfg, std::ostream& out) {
    FlowSetup setup = prepare(cfg.flow);
    FlowConfig f = cfg.flow;
    // Every-step snapshots are the library default; on the command line keep
    // them at the trace cadence.
    if (f.snapshot_every <= 0) f.snapshot_every = f.monitor_every;
    FlowResult r = evolve_unnormalized(setup.u0, setup.psi, f);
    for (const auto& fl : setup.flags)
        if (std::find(r.flags.begin(), r.flags.end(), fl) == r.flags.end()) r.flags.push_back(fl);
    write_run_artifacts(cfg, r, setup.admissibility, out);

    if (r.snapshots.size() >= 2) {
        const auto rescaled = rescale_raw_to_normalized(r.snapshots, f.k, f.alpha);
        auto csv = open_out(fs::path(cfg.output.dir) / "rescaled.csv");
        csv << std::setprecision(17) << "t,tau,u_min,u_max\n";
        for (std::size_t i = 0; i < rescaled.size(); ++i)
            csv << r.snapshots[i].t << ',' << rescaled[i].t << ',' << rescaled[i].u.min() << ',' << rescaled[i].u.max() << '\n';
    }
    out << std::setprecision(10);
    out << "status:   " << to_string(r.status) << (r.message.empty() ? "" : " (" + r.message + ")") << '\n';
    out << "t, steps: " << r.t_final << ", " << r.stats.accepted_steps << '\n';
    out << "u range:  [" << r.u.min() << ", " << r.u.max() << "]\n";
    out << "artifacts: " << cfg.output.dir << '\n';
    return exit_code(r.status, false);
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out, unsigned threads, bool ignore_cap) {
    const SweepAxes& ax = cfg.sweep;
    if (ax.size() > ax.cap && !ignore_cap) {
        out << "sweep has " << ax.size() << " runs, above the cap of " << ax.cap << '\n';
        return kParseError;
    }
    struct Job {
        double alpha, epsilon;
        int resolution;
    };
    const std::vector<double> alphas = ax.alpha.empty() ? std::vector<double>{cfg.flow.alpha} : ax.alpha;
    const std::vector<double> epss = ax.epsilon.empty() ? std::vector<double>{cfg.flow.psi.epsilon()} : ax.epsilon;
    const std::vector<int> ress = ax.resolution.empty() ? std::vector<int>{cfg.flow.resolution.n_theta} : ax.resolution;
    std::vector<Job> jobs;
    for (double a : alphas)
        for (double e : epss)
            for (int n : ress) jobs.push_back({a, e, n});

    struct Row {
        bool converged = false;
        std::size_t steps = 0;
        double residual = std::nan("");
        double c_lp = std::nan("");
        std::string note;
    };
    std::vector<Row> rows(jobs.size());
    std::atomic<std::size_t> next{0};
    ensure_dir(cfg.output.dir);

    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            RunConfig run = cfg;
            run.flow.alpha = jobs[i].alpha;
            if (!ax.epsilon.empty()) run.flow.psi = with_epsilon(cfg.flow.psi, jobs[i].epsilon);
            if (!ax.resolution.empty())
                run.flow.resolution = {jobs[i].resolution, run.flow.grid_variant == GridVariant::FullS2 ? 2 * jobs[i].resolution : 1};
            std::ostringstream name;
            name << "run_" << std::setw(4) << std::setfill('0') << i;
            run.output.dir = (fs::path(cfg.output.dir) / name.str()).string();
            std::ostringstream log;
            try {
                FlowSetup setup = prepare(run.flow);
                FlowResult r = evolve(setup.u0, setup.psi, run.flow);
                write_run_artifacts(run, r, setup.admissibility, log);
                rows[i].converged = r.status == FlowStatus::Converged;
                rows[i].steps = r.stats.accepted_steps;
                rows[i].residual = r.residual.rho_hat_relspread;
                rows[i].c_lp = r.residual.c_lp;
                rows[i].note = to_string(r.status);
            } catch (const std::exception& e) {
                rows[i].note = e.what();
            }
        }
    };
    const unsigned n = std::min<unsigned>(thread_budget(threads), static_cast<unsigned>(std::max<std::size_t>(1, jobs.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    auto csv = open_out(fs::path(cfg.output.dir) / "aggregate.csv");
    csv << std::setprecision(17) << "alpha,epsilon,resolution,converged,steps,final_residual,c_lp\n";
    out << std::setprecision(8);
    bool all = true;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const Row& r = rows[i];
        all = all && r.converged;
        csv << jobs[i].alpha << ',' << jobs[i].epsilon << ',' << jobs[i].resolution << ',' << (r.converged ? 1 : 0) << ',' << r.steps << ','
            << r.residual << ',' << r.c_lp << '\n';
        out << "alpha=" << jobs[i].alpha << " epsilon=" << jobs[i].epsilon << " resolution=" << jobs[i].resolution << "  " << r.note
            << "  steps=" << r.steps << "  c=" << r.c_lp << '\n';
    }
    out << jobs.size() << " runs, " << (all ? "all converged" : "some did not converge") << '\n';
    return all ? kOk : kNotConverged;
}

int cmd_export_mesh(const RunConfig& cfg, const std::string& field_path, std::ostream& out) {
    const FlowConfig& f = cfg.flow;
    if (f.grid_variant != GridVariant::FullS2) throw ConfigError("export-mesh needs a FullS2 grid");
    const GridPtr grid = SphereGrid::build(f.grid_variant, f.n_dim, f.resolution);
    const SupportField u = field_path.empty() ? make_initial_field(f.u0, grid, f.k) : load_field(grid, field_path);
    OutputOptions o = cfg.output;
    if (!o.mesh_obj && !o.mesh_ply) o.mesh_obj = true;
    ensure_dir(o.dir);
    write_mesh(u, o, out);
    out << "wrote " << (o.mesh_obj ? "mesh.obj " : "") << (o.mesh_ply ? "mesh.ply " : "") << "to " << o.dir << '\n';
    return kOk;
}

}  // namespace cmflow::app
