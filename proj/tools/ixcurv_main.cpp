// Command-line front end: dispatches scenarios, writes reports and plot data.
// All diagnostics go to standard error; machine-readable output goes to files
// (the `catalog`, `oracle`, and `verify` listings print to standard output).
// Exit codes: 0 success, 1 assertion/runtime failure, 2 configuration error.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <ixcurv/config.hpp>
#include <ixcurv/criteria.hpp>
#include <ixcurv/expectation.hpp>
#include <ixcurv/report.hpp>
#include <ixcurv/scenarios.hpp>

namespace {

struct CliOverrides {
    std::string config_path;
    std::string scenario;
    uint64_t samples = 0;
    uint64_t seed = 0;
    int threads = 0;
    std::string out_dir;
    bool antithetic = false;
    bool seed_set = false, samples_set = false, threads_set = false;
};

ixcurv::RunConfig resolve_config(const CliOverrides& o) {
    ixcurv::RunConfig cfg;
    if (!o.config_path.empty()) cfg = ixcurv::load_config(o.config_path);
    if (!o.scenario.empty()) cfg.scenario = o.scenario;
    if (o.samples_set) cfg.samples = o.samples;
    if (o.seed_set) cfg.seed = o.seed;
    if (o.threads_set) cfg.threads = o.threads;
    if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
    if (o.antithetic) cfg.antithetic = true;
    return cfg;
}

int do_run(const CliOverrides& o) {
    ixcurv::RunConfig cfg = resolve_config(o);
    ixcurv::Scenario sc = ixcurv::build_scenario(cfg.scenario, cfg.params);
    sc.solver = cfg.solver;
    uint64_t n = cfg.samples > 0 ? cfg.samples : sc.default_samples;

    std::cerr << "running " << sc.name << ": " << n << " samples, seed " << cfg.seed
              << ", " << cfg.threads << " thread(s)"
              << (cfg.antithetic ? ", antithetic pairing" : "") << "\n";

    ixcurv::ExperimentResult r = ixcurv::run_experiment(
        sc, {.samples = n, .seed = cfg.seed, .threads = cfg.threads,
             .antithetic = cfg.antithetic});

    ixcurv::write_run_artifacts(cfg.out_dir, r, cfg.emit_json, cfg.emit_csv,
                                cfg.emit_plotdata);
    ixcurv::write_timing_sidecar(cfg.out_dir, r);

    std::cerr << "chi " << r.chi_expected << " certified per sample ("
              << r.chi_violations << " violations), rejected attempts "
              << r.rejects.total() << ", wall " << r.wall_seconds << "s\n";
    for (const auto& os : r.oracle_stats) {
        std::cerr << "factor " << os.factor << ": max|z| " << os.max_abs_z
                  << ", pearson " << os.pearson << ", p " << os.p_value << "\n";
    }
    std::cerr << "wrote " << cfg.out_dir << "/report.json\n";

    bool violated = r.chi_violations > 0 || r.cross_check_mismatches > 0 ||
                    r.full_hessian_mismatches > 0 ||
                    (r.decomposition.has_value() && !r.decomposition->exact);
    if (violated) {
        std::cerr << "identity violation detected; see report\n";
        return 1;
    }
    return 0;
}

int do_catalog() {
    for (const auto& [name, desc] : ixcurv::scenario_catalog()) {
        std::cout << name << "\t" << desc << "\n";
    }
    return 0;
}

int do_oracle(const CliOverrides& o) {
    ixcurv::RunConfig cfg = resolve_config(o);
    ixcurv::Scenario sc = ixcurv::build_scenario(cfg.scenario, cfg.params);
    std::cout << "scenario " << sc.name << ": chi = " << sc.topo.euler_char << "\n";
    for (size_t k = 0; k < sc.factors.size(); ++k) {
        const auto& f = sc.factors[k];
        double total = 0.0;
        bool any = false;
        for (int b = 0; b < f.bins.bins(); ++b) {
            double o_b = f.bin_oracle[b];
            if (std::isnan(o_b)) continue;
            any = true;
            total += f.oracle_is_density ? o_b * f.bin_area[b] : o_b;
        }
        std::cout << "factor " << (k + 1) << ": "
                  << (f.oracle_is_density ? "uniform density oracle"
                                          : "per-bin mass oracle");
        if (any) std::cout << ", oracle total " << ixcurv::format_double(total);
        std::cout << "\n";
    }
    if (sc.boundary.has_value()) {
        const auto& b = *sc.boundary;
        for (size_t v = 0; v < b.vertex_locations.size(); ++v) {
            std::cout << "vertex " << v << " at (" << b.vertex_locations[v].x()
                      << ", " << b.vertex_locations[v].y() << "): mass oracle "
                      << ixcurv::format_double(b.vertex_oracle[v])
                      << ", angle fraction reference (not an estimator target) "
                      << ixcurv::format_double(b.vertex_reference[v]) << "\n";
        }
        for (size_t e = 0; e < b.edge_lengths.size(); ++e) {
            std::cout << "edge " << e << ": length "
                      << ixcurv::format_double(b.edge_lengths[e]) << "\n";
        }
    }
    return 0;
}

int do_verify(int threads) {
    ixcurv::CriterionScale scale = ixcurv::verify_scale();
    if (threads > 0) scale.threads = threads;
    bool all = true;
    for (int id = 1; id <= 8; ++id) {
        ixcurv::CriterionOutcome out = ixcurv::run_criterion(id, scale);
        std::cout << ixcurv::criterion_line(out) << std::endl;
        all = all && out.pass;
    }
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo index-expectation curvature engine"};
    app.require_subcommand(1);

    CliOverrides o;

    CLI::App* run = app.add_subcommand("run", "run a scenario and write reports");
    run->add_option("--config", o.config_path, "JSON config file");
    run->add_option("--scenario", o.scenario, "scenario name (overrides config)");
    run->add_option("--samples", o.samples, "sample count")
        ->check(CLI::PositiveNumber);
    run->add_option("--seed", o.seed, "RNG seed");
    run->add_option("--threads", o.threads, "worker threads")
        ->check(CLI::PositiveNumber);
    run->add_option("--out", o.out_dir, "output directory");
    run->add_flag("--antithetic", o.antithetic, "pair samples with negated directions");

    CLI::App* catalog = app.add_subcommand("catalog", "list available scenarios");

    CLI::App* verify = app.add_subcommand(
        "verify", "run the full acceptance suite at reduced sample counts");
    int verify_threads = 0;
    verify->add_option("--threads", verify_threads, "worker threads")
        ->check(CLI::PositiveNumber);

    CLI::App* oracle = app.add_subcommand(
        "oracle", "print analytic oracle values for a scenario");
    oracle->add_option("--config", o.config_path, "JSON config file");
    oracle->add_option("--scenario", o.scenario, "scenario name (overrides config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        o.seed_set = run->count("--seed") > 0;
        o.samples_set = run->count("--samples") > 0;
        o.threads_set = run->count("--threads") > 0;
        if (run->parsed()) return do_run(o);
        if (catalog->parsed()) return do_catalog();
        if (verify->parsed()) return do_verify(verify_threads);
        if (oracle->parsed()) return do_oracle(o);
    } catch (const ixcurv::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ixcurv::UnknownScenario& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ixcurv::InvalidParameter& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
