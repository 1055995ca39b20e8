#include "cmflow/app.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace cmflow;

int main(int argc, char** argv) {
    CLI::App cli{"Anisotropic expanding flow of convex bodies by powers of sigma_k"};
    cli.require_subcommand(1);

    std::string config_path;
    app::Overrides ov;
    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", config_path, "run configuration (INI)");
        if (needs_config) c->required()->check(CLI::ExistingFile);
        sub->add_option("--out", ov.out_dir, "output directory (overrides output.dir)");
        sub->add_option("--seed", ov.seed, "seed of the random initial perturbation")->each([&](const std::string&) { ov.has_seed = true; });
        sub->add_flag("--force", ov.force, "run even if psi is not admissible");
        sub->add_flag("--allow-uneven", ov.allow_uneven, "run even if psi is not even");
    };

    auto* check_psi = cli.add_subcommand("check-psi", "evenness and admissibility of psi");
    add_common(check_psi, true);
    auto* evolve = cli.add_subcommand("evolve", "normalized flow to the stationary solution");
    add_common(evolve, true);
    auto* evolve_raw = cli.add_subcommand("evolve-raw", "unnormalized flow up to t_max or blow-up");
    add_common(evolve_raw, true);

    auto* sweep = cli.add_subcommand("sweep", "cartesian sweep over [sweep] axes");
    add_common(sweep, true);
    unsigned threads = 0;
    bool ignore_cap = false;
    sweep->add_option("--threads", threads, "worker threads (capped by CMFLOW_THREADS)");
    sweep->add_flag("--no-cap", ignore_cap, "allow sweeps larger than sweep.cap");

    auto* export_mesh = cli.add_subcommand("export-mesh", "OBJ/PLY mesh of a field (default: u0)");
    add_common(export_mesh, true);
    std::string field_path;
    export_mesh->add_option("--field", field_path, "field file written by evolve (u_final.txt)")->check(CLI::ExistingFile);

    auto* verify = cli.add_subcommand("verify", "oracle suite");
    app::VerifyOptions vopt;
    verify->add_option("--resolution", vopt.resolution, "finest grid of the refinement studies")->check(CLI::PositiveNumber);
    verify->add_option("--corrupt-weights", vopt.weight_scale, "scale quadrature weights (fault injection)");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = cli.exit(e);
        return rc == 0 ? 0 : app::kParseError;
    }

    try {
        if (verify->parsed()) return app::cmd_verify(vopt, std::cout);

        app::RunConfig cfg = app::load_config(config_path);
        app::apply(ov, cfg);
        validate(cfg.flow);
        if (check_psi->parsed()) return app::cmd_check_psi(cfg, std::cout);
        if (evolve->parsed()) return app::cmd_evolve(cfg, std::cout);
        if (evolve_raw->parsed()) return app::cmd_evolve_raw(cfg, std::cout);
        if (sweep->parsed()) return app::cmd_sweep(cfg, std::cout, threads, ignore_cap);
        if (export_mesh->parsed()) return app::cmd_export_mesh(cfg, field_path, std::cout);
    } catch (const InadmissiblePsi& e) {
        std::cerr << "error: " << e.what() << '\n';
        return app::kInadmissible;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return app::kParseError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return app::kCheckFailed;
    }
    return app::kCheckFailed;
}
