#pragma once

// Serialization of experiment results: a JSON report, a CSV histogram dump,
// and whitespace-separated plot data. Everything here is a pure function of
// the result struct except the file writers, which write atomically
// (temporary file, then rename). Measured wall time never enters the report
// body: identical (scenario, seed, samples) runs must produce byte-identical
// files regardless of thread count, so timing goes to a separate sidecar.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "ixcurv/expectation.hpp"

namespace ixcurv {

inline constexpr const char* kVersionString = "ixcurv 1.0.0";

// Index convention recorded in every report so downstream readers do not have
// to guess the sign/sublevel choices.
inline constexpr const char* kConventionNote =
    "indices use the strict sublevel link convention i(x) = 1 - chi(S_r(x) "
    "intersect {f < f(x)}); histogram mass is the raw signed index "
    "expectation per bin (masses sum to the Euler characteristic), density "
    "divides by bin area";

// Shortest round-trip decimal form; "nan" for missing values.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    char buf[40];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    return std::string(buf, p);
}

namespace detail {

inline nlohmann::ordered_json grid_json(const GridSpec& g) {
    return {{"n_u", g.n_u}, {"n_v", g.n_v},
            {"u0", g.rect.u0}, {"u1", g.rect.u1},
            {"v0", g.rect.v0}, {"v1", g.rect.v1}};
}

inline nlohmann::ordered_json histogram_json(const CurvatureHistogram& h) {
    nlohmann::ordered_json j;
    j["factor"] = h.factor;
    j["grid"] = grid_json(h.grid);
    j["oracle_kind"] = h.oracle_is_density ? "density" : "mass";
    j["total_mass"] = h.total_mass();
    j["overflow"] = {{"sum", h.overflow_sum}, {"n_atoms", h.overflow_n}};
    nlohmann::ordered_json mass = nlohmann::ordered_json::array();
    nlohmann::ordered_json se = nlohmann::ordered_json::array();
    nlohmann::ordered_json oracle = nlohmann::ordered_json::array();
    nlohmann::ordered_json area = nlohmann::ordered_json::array();
    nlohmann::ordered_json atoms = nlohmann::ordered_json::array();
    for (int b = 0; b < h.grid.bins(); ++b) {
        mass.push_back(h.mass(b));
        se.push_back(h.stderr_of_mass(b));
        oracle.push_back(h.oracle[b]);  // NaN serializes as null
        area.push_back(h.area[b]);
        atoms.push_back(h.n_atoms[b]);
    }
    j["mass"] = std::move(mass);
    j["stderr"] = std::move(se);
    j["oracle"] = std::move(oracle);
    j["area"] = std::move(area);
    j["n_atoms"] = std::move(atoms);
    return j;
}

inline nlohmann::ordered_json boundary_json(const ExperimentResult& r) {
    nlohmann::ordered_json j;
    j["vertices"] = nlohmann::ordered_json::array();
    j["edges"] = nlohmann::ordered_json::array();
    if (r.boundary.has_value()) {
        const BoundaryMeasure& bm = *r.boundary;
        for (const auto& v : bm.vertices) {
            j["vertices"].push_back(
                {{"u", v.location.x()},
                 {"v", v.location.y()},
                 {"mass", v.mass(bm.n_samples)},
                 {"stderr", v.stderr_of_mass(bm.n_samples)},
                 {"oracle", v.oracle},
                 // For reference only (not an estimator target): the interior
                 // angle as a fraction of pi.
                 {"angle_fraction_reference", v.reference}});
        }
        for (const auto& e : bm.edges) {
            nlohmann::ordered_json mass = nlohmann::ordered_json::array();
            nlohmann::ordered_json atoms = nlohmann::ordered_json::array();
            for (size_t b = 0; b < e.sum.size(); ++b) {
                mass.push_back(e.mass(static_cast<int>(b), bm.n_samples));
                atoms.push_back(e.n_atoms[b]);
            }
            j["edges"].push_back({{"edge", e.edge_id},
                                  {"length", e.t_end},
                                  {"total_mass", e.total_mass(bm.n_samples)},
                                  {"mass", std::move(mass)},
                                  {"n_atoms", std::move(atoms)}});
        }
    }
    if (r.decomposition.has_value()) {
        const BoundaryDecomposition& d = *r.decomposition;
        j["decomposition"] = {{"interior_total", d.interior_total},
                              {"vertex_total", d.vertex_total},
                              {"edge_total", d.edge_total},
                              {"overflow_total", d.overflow_total},
                              {"recombined", d.recombined},
                              {"chi_expected", d.chi_expected},
                              {"exact", d.exact}};
    }
    return j;
}

inline nlohmann::ordered_json statistics_json(const ExperimentResult& r) {
    nlohmann::ordered_json j;

    nlohmann::ordered_json fact;
    fact["applicable"] = r.factorization.applicable;
    if (r.factorization.applicable) {
        fact["tested_pairs"] = r.factorization.tested_pairs;
        fact["excluded_pairs"] = r.factorization.excluded_pairs;
        fact["max_abs_z"] = r.factorization.max_abs_z;
        fact["chi2"] = r.factorization.chi2;
        fact["dof"] = r.factorization.dof;
        fact["p_value"] = r.factorization.p_value;
    }
    j["factorization"] = std::move(fact);

    nlohmann::ordered_json cov;
    cov["applicable"] = r.covariance.applicable;
    if (r.covariance.applicable) {
        cov["underpowered"] = r.covariance.underpowered;
        cov["max_abs_z"] = r.covariance.max_abs_z;
        cov["flagged"] = r.covariance.flagged;
        nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
        for (const auto& p : r.covariance.pairs) {
            pairs.push_back({{"factor_a", p.factor_a},
                             {"region_a", p.region_a},
                             {"factor_b", p.factor_b},
                             {"region_b", p.region_b},
                             {"cov", p.cov},
                             {"se", p.se},
                             {"z", p.z}});
        }
        cov["pairs"] = std::move(pairs);
    }
    j["covariance"] = std::move(cov);

    nlohmann::ordered_json oracle = nlohmann::ordered_json::array();
    for (const auto& s : r.oracle_stats) {
        nlohmann::ordered_json e;
        e["factor"] = s.factor;
        e["pearson"] = s.pearson;
        e["max_abs_z"] = s.max_abs_z;
        e["chi2"] = s.chi2;
        e["dof"] = s.dof;
        e["p_value"] = s.p_value;
        e["unresolved_bins"] = s.unresolved_bins;
        e["z"] = s.z;
        oracle.push_back(std::move(e));
    }
    j["oracle"] = std::move(oracle);

    // Solver self-consistency evidence: the dual index routes and, for the
    // combined scenario, the full-Hessian product check and the sectional
    // sign margin.
    nlohmann::ordered_json cert;
    cert["cross_check_mismatches"] = r.cross_check_mismatches;
    cert["full_hessian_mismatches"] = r.full_hessian_mismatches;
    cert["escalations"] = r.escalations;
    cert["sectional_margin"] = r.sectional_margin;  // NaN -> null when unused
    j["certification"] = std::move(cert);
    return j;
}

}  // namespace detail

inline nlohmann::ordered_json report_json(const ExperimentResult& r) {
    nlohmann::ordered_json j;
    j["scenario"] = r.scenario;
    j["seed"] = r.seed;
    j["samples"] = r.samples;
    j["antithetic"] = r.antithetic;
    j["rejected"] = {{"degenerate", r.rejects.degenerate},
                     {"ambiguous", r.rejects.ambiguous},
                     {"uncertified", r.rejects.uncertified},
                     {"total", r.rejects.total()}};
    j["chi"] = r.chi_expected;
    j["chi_violations"] = r.chi_violations;
    j["solver_options"] = {{"grid_n", r.solver.grid_n},
                           {"max_grid", r.solver.max_grid},
                           {"newton_tol", r.solver.newton_tol},
                           {"newton_max_iter", r.solver.newton_max_iter},
                           {"dedupe_radius", r.solver.dedupe_radius},
                           {"link_samples", r.solver.link_samples},
                           {"morse_gate", r.solver.morse_gate},
                           {"edge_scan", r.solver.edge_scan},
                           {"cross_check", r.solver.cross_check}};
    j["histograms"] = nlohmann::ordered_json::array();
    for (const auto& h : r.histograms) {
        j["histograms"].push_back(detail::histogram_json(h));
    }
    j["boundary"] = detail::boundary_json(r);
    j["statistics"] = detail::statistics_json(r);
    // Reports must be byte-identical across thread counts, so the measured
    // time lives in a sidecar (write_timing_sidecar), not here.
    j["wall_time_s"] = nullptr;
    j["version"] = kVersionString;
    j["convention"] = kConventionNote;
    return j;
}

inline std::string render_report(const ExperimentResult& r) {
    return report_json(r).dump(2) + "\n";
}

// CSV histogram dump, one row per bin per factor.
inline std::string render_histogram_csv(const ExperimentResult& r) {
    std::string out =
        "scenario,factor,bin_u_lo,bin_u_hi,bin_v_lo,bin_v_hi,mass,stderr,"
        "oracle,n_atoms\n";
    for (const auto& h : r.histograms) {
        for (int b = 0; b < h.grid.bins(); ++b) {
            Rect rc = h.grid.bin_rect(b);
            out += r.scenario;
            out += ',';
            out += std::to_string(h.factor);
            out += ',';
            out += format_double(rc.u0);
            out += ',';
            out += format_double(rc.u1);
            out += ',';
            out += format_double(rc.v0);
            out += ',';
            out += format_double(rc.v1);
            out += ',';
            out += format_double(h.mass(b));
            out += ',';
            out += format_double(h.stderr_of_mass(b));
            out += ',';
            out += format_double(h.oracle[b]);
            out += ',';
            out += std::to_string(h.n_atoms[b]);
            out += '\n';
        }
    }
    return out;
}

// Plot-ready data: bin centers, mass, oracle. Rows sharing a u-row are
// grouped with single blank lines (gnuplot grid format); factors are
// separated by double blank lines (gnuplot "index" blocks).
inline std::string render_plotdata(const ExperimentResult& r) {
    std::string out;
    bool first = true;
    for (const auto& h : r.histograms) {
        if (!first) out += "\n\n";
        first = false;
        out += "# ";
        out += r.scenario;
        out += " factor ";
        out += std::to_string(h.factor);
        out += ": u_center v_center mass oracle\n";
        for (int iu = 0; iu < h.grid.n_u; ++iu) {
            if (iu > 0) out += '\n';
            for (int iv = 0; iv < h.grid.n_v; ++iv) {
                int b = iv * h.grid.n_u + iu;
                Rect rc = h.grid.bin_rect(b);
                out += format_double(0.5 * (rc.u0 + rc.u1));
                out += ' ';
                out += format_double(0.5 * (rc.v0 + rc.v1));
                out += ' ';
                out += format_double(h.mass(b));
                out += ' ';
                out += format_double(h.oracle[b]);
                out += '\n';
            }
        }
    }
    return out;
}

// Write-then-rename so a crash cannot leave a truncated file in place.
inline void write_text_atomic(const std::filesystem::path& path,
                              std::string_view content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open for writing: " + tmp.string());
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!f) throw IoError("short write: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename failed: " + path.string() + ": " + ec.message());
}

struct RunArtifacts {
    std::filesystem::path report;
    std::filesystem::path csv;
    std::filesystem::path plotdata;
};

inline RunArtifacts write_run_artifacts(const std::filesystem::path& dir,
                                        const ExperimentResult& r,
                                        bool emit_json = true,
                                        bool emit_csv = true,
                                        bool emit_plotdata = true) {
    std::filesystem::create_directories(dir);
    RunArtifacts a;
    if (emit_json) {
        a.report = dir / "report.json";
        write_text_atomic(a.report, render_report(r));
    }
    if (emit_csv) {
        a.csv = dir / "histograms.csv";
        write_text_atomic(a.csv, render_histogram_csv(r));
    }
    if (emit_plotdata) {
        a.plotdata = dir / "plotdata.dat";
        write_text_atomic(a.plotdata, render_plotdata(r));
    }
    return a;
}

// The only place measured time is persisted; deliberately not part of
// report.json (see the determinism note at the top).
inline void write_timing_sidecar(const std::filesystem::path& dir,
                                 const ExperimentResult& r) {
    nlohmann::ordered_json j;
    j["scenario"] = r.scenario;
    j["wall_time_s"] = r.wall_seconds;
    write_text_atomic(dir / "timing.json", j.dump(2) + "\n");
}

}  // namespace ixcurv
