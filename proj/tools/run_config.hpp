#pragma once

// Command-line and config-file front end. Flags override config-file values;
// the resolved configuration serialises to the same JSON schema the config
// file accepts, so `--print-config` output can be fed back via `--config`.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pulse_dicke/experiments.hpp"
#include "pulse_dicke/results.hpp"
#include "pulse_dicke/validation.hpp"

namespace pulse_dicke::cli {

inline const std::vector<std::string> kCommands{"sweep-fidelity", "entropy-map", "negativity-trace", "find-ustar", "validate"};

struct RunConfig {
    std::string command;
    std::vector<int> n{3};
    double omega{1.0};
    double epsilon{1.0};
    double peak{1.0};
    std::optional<int> n_max;
    int n_max_start{40};
    int n_max_limit{320};
    std::optional<double> upsilon;
    double upsilon_min{0.05};
    double upsilon_max{5.0};
    int upsilon_points{60};
    std::vector<double> kappa{0.0, 0.01, 0.05, 0.1, 0.2};
    double nbar{0.0};
    int steps_per_unit_time{2000};
    int open_steps_per_unit_time{250};
    int samples{41};
    double refine_tol{1e-4};
    std::string out;
    std::string peaks_out;
    std::string records_out;
    std::string format{"csv"};
    int workers{1};

    // Not part of the serialised schema.
    bool print_config{false};
    std::string help;

    bool operator==(const RunConfig& o) const { return to_json() == o.to_json(); }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["command"] = command;
        j["n"] = n;
        j["omega"] = omega;
        j["epsilon"] = epsilon;
        j["peak"] = peak;
        j["n_max"] = n_max ? nlohmann::ordered_json(*n_max) : nlohmann::ordered_json(nullptr);
        j["n_max_start"] = n_max_start;
        j["n_max_limit"] = n_max_limit;
        j["upsilon"] = upsilon ? nlohmann::ordered_json(*upsilon) : nlohmann::ordered_json(nullptr);
        j["upsilon_min"] = upsilon_min;
        j["upsilon_max"] = upsilon_max;
        j["upsilon_points"] = upsilon_points;
        j["kappa"] = kappa;
        j["nbar"] = nbar;
        j["steps_per_unit_time"] = steps_per_unit_time;
        j["open_steps_per_unit_time"] = open_steps_per_unit_time;
        j["samples"] = samples;
        j["refine_tol"] = refine_tol;
        j["out"] = out;
        j["peaks_out"] = peaks_out;
        j["records_out"] = records_out;
        j["format"] = format;
        j["workers"] = workers;
        return j;
    }

    std::vector<double> upsilon_grid() const {
        if (upsilon) return {*upsilon};
        return SweepGrid::log_spaced(upsilon_min, upsilon_max, upsilon_points);
    }
};

inline Error usage(const std::string& flag, const std::string& msg) { return Error(ErrorCode::UsageError, flag + ": " + msg); }

// Overlays the keys present in `j` onto `cfg`.
inline void apply_json(RunConfig& cfg, const nlohmann::json& j) {
    if (!j.is_object()) throw usage("--config", "config file must hold a JSON object");
    const std::set<std::string> known = [] {
        std::set<std::string> k;
        const auto defaults = RunConfig{}.to_json();
        for (const auto& [key, _] : defaults.items()) k.insert(key);
        return k;
    }();
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw usage("--config", "unknown key '" + key + "'");
    try {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) j.at(key).get_to(field);
        };
        auto get_opt = [&](const char* key, auto& field) {
            if (!j.contains(key)) return;
            if (j.at(key).is_null()) field.reset();
            else field = j.at(key).get<typename std::remove_reference_t<decltype(field)>::value_type>();
        };
        get("command", cfg.command);
        get("n", cfg.n);
        get("omega", cfg.omega);
        get("epsilon", cfg.epsilon);
        get("peak", cfg.peak);
        get_opt("n_max", cfg.n_max);
        get("n_max_start", cfg.n_max_start);
        get("n_max_limit", cfg.n_max_limit);
        get_opt("upsilon", cfg.upsilon);
        get("upsilon_min", cfg.upsilon_min);
        get("upsilon_max", cfg.upsilon_max);
        get("upsilon_points", cfg.upsilon_points);
        get("kappa", cfg.kappa);
        get("nbar", cfg.nbar);
        get("steps_per_unit_time", cfg.steps_per_unit_time);
        get("open_steps_per_unit_time", cfg.open_steps_per_unit_time);
        get("samples", cfg.samples);
        get("refine_tol", cfg.refine_tol);
        get("out", cfg.out);
        get("peaks_out", cfg.peaks_out);
        get("records_out", cfg.records_out);
        get("format", cfg.format);
        get("workers", cfg.workers);
    } catch (const nlohmann::json::exception& e) {
        throw usage("--config", e.what());
    }
}

inline void validate(const RunConfig& c) {
    if (c.command.empty()) throw usage("command", "no command given (one of sweep-fidelity, entropy-map, negativity-trace, find-ustar, validate)");
    if (std::find(kCommands.begin(), kCommands.end(), c.command) == kCommands.end())
        throw usage("command", "unknown command '" + c.command + "'");
    if (c.n.empty()) throw usage("--n", "at least one group size is required");
    for (int n : c.n)
        if (n < 1) throw usage("--n", "n_attackers must be >= 1");
    if (!(c.omega > 0.0)) throw usage("--omega", "must be positive");
    if (!(c.epsilon > 0.0)) throw usage("--epsilon", "must be positive");
    if (!(c.peak > 0.0)) throw usage("--peak", "must be positive");
    if (c.n_max && *c.n_max < 1) throw usage("--n-max", "must be >= 1");
    if (c.n_max_start < 1) throw usage("--n-max-start", "must be >= 1");
    if (c.n_max_limit < c.n_max_start) throw usage("--n-max-limit", "must be >= --n-max-start");
    if (c.upsilon && !(*c.upsilon > 0.0)) throw usage("--upsilon", "must be positive");
    if (!(c.upsilon_min > 0.0)) throw usage("--upsilon-min", "must be positive");
    if (!(c.upsilon_max > c.upsilon_min)) throw usage("--upsilon-max", "must exceed --upsilon-min");
    if (c.upsilon_points < 3) throw usage("--upsilon-points", "must be >= 3");
    if (c.kappa.empty()) throw usage("--kappa", "at least one value is required");
    for (double k : c.kappa)
        if (!(k >= 0.0)) throw usage("--kappa", "values must be >= 0");
    if (!(c.nbar >= 0.0)) throw usage("--nbar", "must be >= 0");
    if (c.steps_per_unit_time < 1) throw usage("--steps-per-unit-time", "must be >= 1");
    if (c.open_steps_per_unit_time < 1) throw usage("--open-steps-per-unit-time", "must be >= 1");
    if (c.samples < 2) throw usage("--samples", "must be >= 2");
    if (!(c.refine_tol > 0.0)) throw usage("--refine-tol", "must be positive");
    if (c.format != "csv" && c.format != "json") throw usage("--format", "expected csv or json");
    if (c.workers < 1) throw usage("--workers", "must be >= 1");
    if (c.command == "negativity-trace" && !c.upsilon) throw usage("--upsilon", "negativity-trace needs a single pulse speed");
}

inline int env_workers() {
    if (const char* env = std::getenv("PULSE_DICKE_WORKERS")) {
        try {
            const int w = std::stoi(env);
            if (w >= 1) return w;
        } catch (const std::exception&) {
        }
        throw usage("PULSE_DICKE_WORKERS", std::string("expected a positive integer, got '") + env + "'");
    }
    return default_workers();
}

inline RunConfig parse_config(int argc, const char* const* argv) {
    RunConfig flags;
    CLI::App app{"Pulsed Dicke-model attack simulator", "pulse_dicke"};
    app.fallthrough();
    app.require_subcommand(0, 1);
    const std::map<std::string, std::string> about{
        {"sweep-fidelity", "Fidelity and entropy per (N, upsilon) grid point"},
        {"entropy-map", "Entanglement entropy along the pulse for each speed"},
        {"negativity-trace", "Negativity along the pulse for each kappa"},
        {"find-ustar", "Locate the fidelity dip for each N"},
        {"validate", "Run the built-in correctness checks"}};
    for (const auto& name : kCommands) app.add_subcommand(name, about.at(name))->fallthrough();

    std::string config_path;
    std::optional<int> n_max;
    std::optional<double> upsilon;
    app.add_option("--config", config_path, "JSON config file (flags override its values)");
    app.add_flag("--print-config", flags.print_config, "Print the resolved configuration as JSON and exit");
    auto* o_n = app.add_option("--n", flags.n, "Group sizes N")->delimiter(',');
    auto* o_omega = app.add_option("--omega", flags.omega, "Cavity frequency");
    auto* o_eps = app.add_option("--epsilon", flags.epsilon, "Qubit splitting");
    auto* o_peak = app.add_option("--peak", flags.peak, "Pulse peak coupling");
    auto* o_nmax = app.add_option("--n-max", n_max, "Fixed Fock cutoff (disables convergence search)");
    auto* o_nstart = app.add_option("--n-max-start", flags.n_max_start, "First Fock cutoff tried");
    auto* o_nlimit = app.add_option("--n-max-limit", flags.n_max_limit, "Largest Fock cutoff tried");
    auto* o_u = app.add_option("--upsilon", upsilon, "Single pulse speed");
    auto* o_umin = app.add_option("--upsilon-min", flags.upsilon_min, "Lowest pulse speed of the log grid");
    auto* o_umax = app.add_option("--upsilon-max", flags.upsilon_max, "Highest pulse speed of the log grid");
    auto* o_upts = app.add_option("--upsilon-points", flags.upsilon_points, "Points of the log grid");
    auto* o_kappa = app.add_option("--kappa", flags.kappa, "Cavity damping rates")->delimiter(',');
    auto* o_nbar = app.add_option("--nbar", flags.nbar, "Thermal occupation");
    auto* o_spu = app.add_option("--steps-per-unit-time", flags.steps_per_unit_time, "RK4 steps per unit time (closed)");
    auto* o_ospu = app.add_option("--open-steps-per-unit-time", flags.open_steps_per_unit_time, "RK4 steps per unit time (open)");
    auto* o_samples = app.add_option("--samples", flags.samples, "Snapshots per trajectory");
    auto* o_tol = app.add_option("--refine-tol", flags.refine_tol, "Relative tolerance of the pulse-speed refinement");
    auto* o_out = app.add_option("--out", flags.out, "Output file (standard output when omitted)");
    auto* o_peaks = app.add_option("--peaks-out", flags.peaks_out, "entropy-map: per-speed maximum entropy file");
    auto* o_records = app.add_option("--records-out", flags.records_out, "negativity-trace: end-of-pulse record file");
    auto* o_format = app.add_option("--format", flags.format, "csv or json");
    auto* o_workers = app.add_option("--workers", flags.workers, "Worker threads (default: PULSE_DICKE_WORKERS or all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        RunConfig r;
        r.help = app.help();
        return r;
    } catch (const CLI::ParseError& e) {
        throw Error(ErrorCode::UsageError, e.what());
    }

    if (o_u->count() && (o_umin->count() || o_umax->count() || o_upts->count()))
        throw Error(ErrorCode::Conflict, "--upsilon cannot be combined with --upsilon-min/--upsilon-max/--upsilon-points");

    RunConfig cfg;
    cfg.workers = 0;
    if (!config_path.empty()) {
        std::ifstream f(config_path);
        if (!f) throw usage("--config", "cannot open '" + config_path + "'");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(f);
        } catch (const nlohmann::json::exception& e) {
            throw usage("--config", e.what());
        }
        apply_json(cfg, j);
    }
    for (const auto* sub : app.get_subcommands()) cfg.command = sub->get_name();
    if (o_n->count()) cfg.n = flags.n;
    if (o_omega->count()) cfg.omega = flags.omega;
    if (o_eps->count()) cfg.epsilon = flags.epsilon;
    if (o_peak->count()) cfg.peak = flags.peak;
    if (o_nmax->count()) cfg.n_max = n_max;
    if (o_nstart->count()) cfg.n_max_start = flags.n_max_start;
    if (o_nlimit->count()) cfg.n_max_limit = flags.n_max_limit;
    if (o_u->count()) cfg.upsilon = upsilon;
    if (o_umin->count() || o_umax->count() || o_upts->count()) cfg.upsilon.reset();
    if (o_umin->count()) cfg.upsilon_min = flags.upsilon_min;
    if (o_umax->count()) cfg.upsilon_max = flags.upsilon_max;
    if (o_upts->count()) cfg.upsilon_points = flags.upsilon_points;
    if (o_kappa->count()) cfg.kappa = flags.kappa;
    if (o_nbar->count()) cfg.nbar = flags.nbar;
    if (o_spu->count()) cfg.steps_per_unit_time = flags.steps_per_unit_time;
    if (o_ospu->count()) cfg.open_steps_per_unit_time = flags.open_steps_per_unit_time;
    if (o_samples->count()) cfg.samples = flags.samples;
    if (o_tol->count()) cfg.refine_tol = flags.refine_tol;
    if (o_out->count()) cfg.out = flags.out;
    if (o_peaks->count()) cfg.peaks_out = flags.peaks_out;
    if (o_records->count()) cfg.records_out = flags.records_out;
    if (o_format->count()) cfg.format = flags.format;
    if (o_workers->count()) cfg.workers = flags.workers;
    else if (cfg.workers == 0) cfg.workers = env_workers();
    cfg.print_config = flags.print_config;

    validate(cfg);
    return cfg;
}

inline ExperimentConfig experiment_config(const RunConfig& c) {
    ExperimentConfig e;
    e.omega = c.omega;
    e.epsilon = c.epsilon;
    e.peak = c.peak;
    e.truncation.fixed_n_max = c.n_max;
    e.truncation.start_n_max = c.n_max_start;
    e.truncation.limit_n_max = c.n_max_limit;
    e.closed_integrator.steps_per_unit_time = c.steps_per_unit_time;
    e.open_integrator.steps_per_unit_time = c.open_steps_per_unit_time;
    e.sample_count = c.samples;
    e.workers = c.workers;
    return e;
}

// Writes to `path`, or to `out` when the path is empty.
inline void emit(const Table& table, const std::string& path, OutputFormat format, std::ostream& out) {
    if (table.rows.empty()) throw Error(ErrorCode::Rejected, "no results to write");
    if (path.empty()) out << render(table, format);
    else write_table(table, path, format);
}

// Exit status: 0 success, 2 when any grid point or check failed, 1 on usage
// and I/O errors.
inline int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
    if (!c.help.empty()) {
        out << c.help;
        return 0;
    }
    if (c.print_config) {
        out << c.to_json().dump(2) << "\n";
        return 0;
    }
    try {
        ExperimentConfig e = experiment_config(c);
        e.progress = [&err](const std::string& msg) { err << msg << "\n"; };
        const OutputFormat fmt = parse_format(c.format);
        bool any_failed = false;

        if (c.command == "validate") {
            for (const auto& r : run_validation([&](const CheckResult& r) {
                     out << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
                 }))
                any_failed = any_failed || !r.pass;
        } else if (c.command == "sweep-fidelity") {
            const auto records = sweep_fidelity({c.n, c.upsilon_grid(), {}, 0.0}, e);
            for (const auto& r : records) any_failed = any_failed || r.failed();
            emit(records_table(records, fmt), c.out, fmt, out);
        } else if (c.command == "find-ustar") {
            for (int n : c.n) {
                const UStarResult u = find_ustar(n, c.upsilon_min, c.upsilon_max, c.refine_tol, e, c.upsilon_points);
                nlohmann::ordered_json j;
                j["n_attackers"] = u.n_attackers;
                j["upsilon_star"] = u.upsilon_star;
                j["fidelity_min"] = u.fidelity_min;
                j["coarse_upsilon"] = u.coarse_upsilon;
                j["coarse_fidelity"] = u.coarse_fidelity;
                j["n_max_used"] = u.n_max_used;
                out << j.dump() << "\n";
            }
        } else if (c.command == "entropy-map") {
            EntropyMap all;
            for (int n : c.n) {
                EntropyMap m = entropy_map(n, c.upsilon_grid(), c.samples, e);
                all.rows.insert(all.rows.end(), m.rows.begin(), m.rows.end());
                all.peaks.insert(all.peaks.end(), m.peaks.begin(), m.peaks.end());
            }
            for (const auto& p : all.peaks) any_failed = any_failed || p.status == RecordStatus::Failed;
            emit(entropy_table(all.rows), c.out, fmt, out);
            if (!c.peaks_out.empty()) write_table(entropy_peaks_table(all.peaks), c.peaks_out, fmt);
        } else if (c.command == "negativity-trace") {
            NegativityTrace all;
            for (int n : c.n) {
                NegativityTrace t = negativity_trace(n, *c.upsilon, c.kappa, c.nbar, c.samples, e);
                all.rows.insert(all.rows.end(), t.rows.begin(), t.rows.end());
                all.records.insert(all.records.end(), t.records.begin(), t.records.end());
            }
            for (const auto& r : all.records) any_failed = any_failed || r.failed();
            emit(negativity_table(all.rows), c.out, fmt, out);
            if (!c.records_out.empty()) write_results(all.records, c.records_out, fmt);
        }
        return any_failed ? 2 : 0;
    } catch (const Error& ex) {
        err << ex.what() << "\n";
        if (ex.code() == ErrorCode::UsageError || ex.code() == ErrorCode::Conflict || ex.code() == ErrorCode::IoFailure ||
            ex.code() == ErrorCode::Rejected)
            return 1;
        return 2;
    }
}

}  // namespace pulse_dicke::cli
