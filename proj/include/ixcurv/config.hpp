#pragma once

// Run configuration: a single JSON document mapped onto the scenario, run,
// solver, bin, and emit knobs. Parsing is strict — every key is checked
// against the schema and unknown keys are errors, so a typo cannot silently
// fall back to a default.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>

#include <nlohmann/json.hpp>

#include "ixcurv/critical.hpp"
#include "ixcurv/errors.hpp"
#include "ixcurv/scenarios.hpp"

namespace ixcurv {

struct RunConfig {
    std::string scenario = "sphere";
    ScenarioParams params;
    uint64_t samples = 0;  // 0: use the scenario's default sample count
    uint64_t seed = 1;
    int threads = 1;
    bool antithetic = false;
    std::string out_dir = "out";
    SolverOptions solver;
    bool emit_json = true;
    bool emit_csv = true;
    bool emit_plotdata = true;
};

namespace detail {

using cfg_json = nlohmann::json;

inline void check_keys(const cfg_json& j, const std::string& path,
                       std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
        throw ConfigError(path + ": expected an object");
    }
    for (const auto& [key, _] : j.items()) {
        bool known = false;
        for (const char* a : allowed) {
            if (key == a) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ConfigError(path + ": unknown key '" + key + "'");
        }
    }
}

inline double cfg_num(const cfg_json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path + ": expected a number");
    return j.get<double>();
}

inline int cfg_int(const cfg_json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
    return j.get<int>();
}

inline uint64_t cfg_uint(const cfg_json& j, const std::string& path) {
    if (!j.is_number_integer() || j.get<int64_t>() < 0) {
        throw ConfigError(path + ": expected a non-negative integer");
    }
    return j.get<uint64_t>();
}

inline bool cfg_bool(const cfg_json& j, const std::string& path) {
    if (!j.is_boolean()) throw ConfigError(path + ": expected a boolean");
    return j.get<bool>();
}

inline std::string cfg_str(const cfg_json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path + ": expected a string");
    return j.get<std::string>();
}

inline void parse_scenario_params(const cfg_json& j, ScenarioParams& out) {
    check_keys(j, "scenario.params",
               {"R", "r", "a", "b", "c", "delta", "p", "vertices", "factors"});
    for (const char* key : {"R", "r", "a", "b", "c", "delta", "p"}) {
        if (j.contains(key)) {
            out.values[key] = cfg_num(j[key], std::string("scenario.params.") + key);
        }
    }
    if (j.contains("vertices")) {
        const cfg_json& v = j["vertices"];
        if (!v.is_array()) {
            throw ConfigError("scenario.params.vertices: expected an array");
        }
        for (const auto& pt : v) {
            if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() ||
                !pt[1].is_number()) {
                throw ConfigError(
                    "scenario.params.vertices: expected [x, y] number pairs");
            }
            out.vertices.emplace_back(pt[0].get<double>(), pt[1].get<double>());
        }
    }
    if (j.contains("factors")) {
        const cfg_json& f = j["factors"];
        if (!f.is_array()) {
            throw ConfigError("scenario.params.factors: expected an array");
        }
        for (const auto& name : f) {
            out.factors.push_back(cfg_str(name, "scenario.params.factors[]"));
        }
    }
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    RunConfig c;
    detail::check_keys(j, "config", {"scenario", "run", "solver", "bins", "emit"});

    if (j.contains("scenario")) {
        const auto& s = j["scenario"];
        detail::check_keys(s, "scenario", {"name", "params"});
        if (s.contains("name")) c.scenario = detail::cfg_str(s["name"], "scenario.name");
        if (s.contains("params")) detail::parse_scenario_params(s["params"], c.params);
    }

    if (j.contains("run")) {
        const auto& r = j["run"];
        detail::check_keys(r, "run",
                           {"samples", "seed", "threads", "out_dir", "antithetic"});
        if (r.contains("samples")) c.samples = detail::cfg_uint(r["samples"], "run.samples");
        if (r.contains("seed")) c.seed = detail::cfg_uint(r["seed"], "run.seed");
        if (r.contains("threads")) {
            c.threads = detail::cfg_int(r["threads"], "run.threads");
            if (c.threads < 1) throw ConfigError("run.threads: must be >= 1");
        }
        if (r.contains("out_dir")) c.out_dir = detail::cfg_str(r["out_dir"], "run.out_dir");
        if (r.contains("antithetic")) {
            c.antithetic = detail::cfg_bool(r["antithetic"], "run.antithetic");
        }
    }

    if (j.contains("solver")) {
        const auto& s = j["solver"];
        detail::check_keys(s, "solver",
                           {"grid_n", "max_grid", "newton_tol", "newton_max_iter",
                            "dedupe_radius", "link_samples", "morse_gate",
                            "edge_scan", "cross_check"});
        if (s.contains("grid_n")) c.solver.grid_n = detail::cfg_int(s["grid_n"], "solver.grid_n");
        if (s.contains("max_grid")) c.solver.max_grid = detail::cfg_int(s["max_grid"], "solver.max_grid");
        if (s.contains("newton_tol")) c.solver.newton_tol = detail::cfg_num(s["newton_tol"], "solver.newton_tol");
        if (s.contains("newton_max_iter")) c.solver.newton_max_iter = detail::cfg_int(s["newton_max_iter"], "solver.newton_max_iter");
        if (s.contains("dedupe_radius")) c.solver.dedupe_radius = detail::cfg_num(s["dedupe_radius"], "solver.dedupe_radius");
        if (s.contains("link_samples")) c.solver.link_samples = detail::cfg_int(s["link_samples"], "solver.link_samples");
        if (s.contains("morse_gate")) c.solver.morse_gate = detail::cfg_num(s["morse_gate"], "solver.morse_gate");
        if (s.contains("edge_scan")) c.solver.edge_scan = detail::cfg_int(s["edge_scan"], "solver.edge_scan");
        if (s.contains("cross_check")) c.solver.cross_check = detail::cfg_bool(s["cross_check"], "solver.cross_check");
    }

    if (j.contains("bins")) {
        const auto& b = j["bins"];
        detail::check_keys(b, "bins", {"n_u", "n_v", "edge_profile"});
        if (b.contains("n_u")) c.params.bins_u = detail::cfg_int(b["n_u"], "bins.n_u");
        if (b.contains("n_v")) c.params.bins_v = detail::cfg_int(b["n_v"], "bins.n_v");
        if (b.contains("edge_profile")) {
            c.params.profile_bins = detail::cfg_int(b["edge_profile"], "bins.edge_profile");
        }
        if (c.params.bins_u < 0 || c.params.bins_v < 0 || c.params.profile_bins < 0) {
            throw ConfigError("bins: counts must be positive");
        }
    }

    if (j.contains("emit")) {
        const auto& e = j["emit"];
        detail::check_keys(e, "emit", {"json", "csv", "plotdata"});
        if (e.contains("json")) c.emit_json = detail::cfg_bool(e["json"], "emit.json");
        if (e.contains("csv")) c.emit_csv = detail::cfg_bool(e["csv"], "emit.csv");
        if (e.contains("plotdata")) {
            c.emit_plotdata = detail::cfg_bool(e["plotdata"], "emit.plotdata");
        }
    }

    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config parse error in " + path.string() + ": " + e.what());
    }
    return parse_config(j);
}

}  // namespace ixcurv
