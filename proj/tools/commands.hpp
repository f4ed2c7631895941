// Copyright 2026 The qudit-spectator Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Subcommands of the qudit-spectator tool. Everything lives in a header so
// the test suite can drive the CLI in-process.

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qudit/control.hpp"
#include "qudit/io.hpp"
#include "qudit/spectator.hpp"
#include "qudit/sweeps.hpp"

namespace qudit::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kNumerical = 2 };

/// Raised for problems the user can fix on the command line or in the config.
class UsageError : public Error {
   public:
    using Error::Error;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string &)>;

inline std::optional<std::string> process_env(const std::string &name) {
    if (const char *v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
}

/// Command-line values before merging with the environment and the config.
struct Options {
    std::string config_path;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::string kind;
    std::string pulse_path;
    double eps_over_xi = 0.0;
    std::string csv_path;
};

namespace detail {

template <typename T>
T parse_number(const std::string &text, const std::string &what) {
    T v{};
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size()) {
        throw UsageError(what + ": cannot parse '" + text + "'");
    }
    return v;
}

inline std::string join(const std::filesystem::path &dir, const std::string &name) { return (dir / name).string(); }

inline void ensure_dir(const std::string &dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw UsageError("cannot create output directory '" + dir + "': " + ec.message());
}

inline std::string pulse_path(const std::string &dir, const std::string &label) {
    return join(dir, label + ".pulse.json");
}

}  // namespace detail

/// Precedence: flag, then environment (QUDIT_OUT, QUDIT_SEED, QUDIT_WORKERS),
/// then the config file.
inline void apply_overrides(RunConfig &cfg, const Options &opt, const EnvLookup &env) {
    if (opt.out) {
        cfg.output_dir = *opt.out;
    } else if (auto v = env("QUDIT_OUT")) {
        cfg.output_dir = *v;
    }
    if (opt.seed) {
        cfg.seed = *opt.seed;
    } else if (auto v = env("QUDIT_SEED")) {
        cfg.seed = detail::parse_number<std::uint64_t>(*v, "QUDIT_SEED");
    }
    if (opt.workers) {
        cfg.workers = *opt.workers;
    } else if (auto v = env("QUDIT_WORKERS")) {
        cfg.workers = detail::parse_number<unsigned>(*v, "QUDIT_WORKERS");
    }
}

/// Oscillator the config assigns to a stored pulse's gate.
inline OscillatorSpec config_oscillator_for(const RunConfig &cfg, const GateTask &task) {
    GateConfig g{task.swap_from, task.swap_to, task.duration, task.oscillator.essential_levels};
    for (const auto &c : cfg.gates) {
        if (c.from == task.swap_from && c.to == task.swap_to) g = c;
    }
    return cfg.oscillator_for(g);
}

inline void check_oscillator(const RunConfig &cfg, const PulseFile &pf, const std::string &path) {
    const std::string want = oscillator_hash(config_oscillator_for(cfg, pf.task));
    if (pf.oscillator_hash != want) {
        throw UsageError("pulse file '" + path + "' was made for oscillator " + pf.oscillator_hash +
                         " but the config describes " + want);
    }
}

struct GateOutcome {
    PulseFile file;
    SynthesisResult result;
};

inline GateOutcome synthesize_gate(const RunConfig &cfg, const GateConfig &g, const std::string &hash) {
    const ControlProblem problem = cfg.problem_for(g);
    GateOutcome out;
    out.result = synthesize(problem, cfg.optimizer());
    const auto &rep = out.result.final_report;
    out.file.task = problem.task;
    out.file.pulse = out.result.pulse;
    out.file.oscillator_hash = oscillator_hash(problem.task.oscillator);
    out.file.synthesis = {{"config_hash", hash},
                          {"version", kVersion},
                          {"seed", cfg.seed},
                          {"iterations", rep.iteration},
                          {"converged", out.result.converged},
                          {"infidelity", rep.infidelity},
                          {"guard_penalty", rep.guard_penalty},
                          {"total", rep.total}};
    return out;
}

/// One pulse file and one trace CSV per gate, plus synthesize.json listing
/// them. Exit code 2 if any gate misses the infidelity threshold.
inline int cmd_synthesize(const RunConfig &cfg, std::ostream &out, std::ostream &log) {
    const std::string hash = config_hash(cfg);
    const std::string dir = cfg.output_dir;
    detail::ensure_dir(dir);
    Json manifest = {{"config_hash", hash}, {"version", kVersion}, {"gates", Json::array()}};
    bool all_ok = true;
    for (const auto &g : cfg.gates) {
        log << "synthesizing " << g.label() << " (" << g.duration_ns << " ns)\n";
        GateOutcome o;
        try {
            o = synthesize_gate(cfg, g, hash);
        } catch (const PropagationError &e) {
            log << g.label() << ": " << e.what() << "\n";
            manifest["gates"].push_back({{"label", g.label()}, {"error", e.what()}});
            all_ok = false;
            continue;
        }
        const auto &rep = o.result.final_report;
        save_pulse(detail::pulse_path(dir, g.label()), o.file);
        std::ostringstream trace;
        write_trace_csv(o.result.history, trace);
        write_text_file(detail::join(dir, g.label() + ".trace.csv"), trace.str());
        const bool ok = rep.infidelity <= cfg.infidelity_threshold;
        all_ok = all_ok && ok;
        manifest["gates"].push_back({{"label", g.label()},
                                     {"pulse", g.label() + ".pulse.json"},
                                     {"trace", g.label() + ".trace.csv"},
                                     {"infidelity", rep.infidelity},
                                     {"guard_penalty", rep.guard_penalty},
                                     {"meets_threshold", ok}});
        out << g.label() << " infidelity=" << format_double(rep.infidelity)
            << " guard_penalty=" << format_double(rep.guard_penalty) << (ok ? "" : " ABOVE THRESHOLD") << "\n";
    }
    write_text_file(detail::join(dir, "synthesize.json"), manifest.dump(2) + "\n");
    return all_ok ? kOk : kNumerical;
}

inline int cmd_evaluate(const RunConfig &cfg, const std::string &pulse_file, double eps_over_xi, std::ostream &out) {
    const PulseFile pf = load_pulse(pulse_file);
    check_oscillator(cfg, pf, pulse_file);
    const ShiftedFidelity sim(pf.pulse, pf.task, cfg.propagation());
    const PerturbativeModel model = perturbative_model(pf.pulse, pf.task, cfg.propagation());
    const DecayReport r = decay_report(sim, model, eps_over_xi);
    const Json j = {{"gate", pf.task.label()},
                    {"eps_over_xi", r.eps_over_xi},
                    {"simulated_infidelity", r.simulated_infidelity},
                    {"predicted_infidelity", r.predicted_infidelity},
                    {"susceptibility", r.susceptibility},
                    {"config_hash", config_hash(cfg)}};
    out << j.dump(2) << "\n";
    return kOk;
}

/// Loads <out>/<label>.pulse.json when present, otherwise synthesizes and
/// saves it.
inline GatePulse obtain_gate(const RunConfig &cfg, const std::string &label, const std::string &hash,
                             std::ostream &log) {
    const GateConfig &g = cfg.gate(label);
    const std::string path = detail::pulse_path(cfg.output_dir, label);
    if (std::filesystem::exists(path)) {
        PulseFile pf = load_pulse(path);
        check_oscillator(cfg, pf, path);
        if (pf.task.duration != g.duration_ns) {
            throw UsageError("pulse file '" + path + "' has a different gate duration than the config");
        }
        return {label, pf.task, pf.pulse};
    }
    log << "no pulse for " << label << ", synthesizing\n";
    const GateOutcome o = synthesize_gate(cfg, g, hash);
    save_pulse(path, o.file);
    return {label, o.file.task, o.file.pulse};
}

inline void write_sweep(const SweepResult &res, const std::string &dir, const std::string &stem) {
    std::ostringstream csv;
    write_csv(res, csv);
    write_text_file(detail::join(dir, stem + ".csv"), csv.str());
    write_text_file(detail::join(dir, stem + ".json"), res.provenance.dump(2) + "\n");
}

inline void print_range(const SweepResult &res, std::ostream &out) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto &r : res.rows) {
        if (std::isnan(r.infidelity)) continue;
        lo = std::min(lo, r.infidelity);
        hi = std::max(hi, r.infidelity);
    }
    out << "cells=" << res.rows.size() << " failed=" << res.failed_cells << " min_infidelity=" << format_double(lo)
        << " max_infidelity=" << format_double(hi) << "\n";
}

inline void print_slopes(const std::vector<Curve> &curves, std::pair<double, double> window, std::ostream &out) {
    for (const auto &c : curves) out << c.label << " slope=" << format_double(fit_slope(c, window)) << "\n";
}

inline int cmd_sweep(const RunConfig &cfg, const std::string &kind, std::ostream &out, std::ostream &log) {
    const std::string hash = config_hash(cfg);
    detail::ensure_dir(cfg.output_dir);
    Json prov = {{"config_hash", hash}, {"seed", cfg.seed}};
    SweepResult res;
    if (kind == "heatmap") {
        if (!cfg.heatmap) throw UsageError("config has no 'heatmap' section");
        HeatmapSpec spec;
        spec.gate = obtain_gate(cfg, cfg.heatmap->gate, hash, log);
        spec.occ_max = cfg.heatmap->occ_max;
        spec.cross_kerr_exponents = cfg.heatmap->exponents;
        res = run_heatmap(spec, cfg.propagation(), cfg.workers, prov);
        write_sweep(res, cfg.output_dir, "heatmap");
        print_range(res, out);
    } else if (kind == "scaling") {
        ScalingSpec spec;
        std::vector<std::string> labels = cfg.scaling.gates;
        if (labels.empty()) {
            for (const auto &g : cfg.gates) labels.push_back(g.label());
        }
        if (labels.empty()) throw UsageError("scaling sweep needs at least one gate");
        for (const auto &l : labels) spec.gates.push_back(obtain_gate(cfg, l, hash, log));
        spec.slope_window = cfg.scaling.slope_window;
        spec.eps_over_xi_grid = cfg.scaling.grid.value_or(default_scaling_grid(spec.slope_window));
        spec.anchor = cfg.scaling.anchor;
        spec.reference = cfg.scaling.reference;
        res = run_scaling(spec, cfg.propagation(), cfg.workers, prov);
        write_sweep(res, cfg.output_dir, "scaling");
        print_range(res, out);
        print_slopes(curves_from(res), spec.slope_window, out);
    } else {
        throw UsageError("--kind must be 'heatmap' or 'scaling'");
    }
    return res.failed_cells == 0 ? kOk : kNumerical;
}

/// Re-fit slopes from an existing scaling CSV.
inline int cmd_slope(const std::string &csv_path, std::pair<double, double> window, std::ostream &out) {
    std::istringstream in(qudit::detail::read_file(csv_path));
    const SweepResult res = read_csv(in);
    if (res.kind != SweepKind::kScaling) throw UsageError("'" + csv_path + "' is not a scaling CSV");
    print_slopes(curves_from(res), window, out);
    return kOk;
}

/// Full command line, argv[0] excluded. Returns the process exit code.
inline int run(std::vector<std::string> args, std::ostream &out, std::ostream &err, const EnvLookup &env = process_env) {
    CLI::App app{"Single-qudit SWAP pulse synthesis and spectator-shift analysis", "qudit-spectator"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    Options opt;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<std::string> outdir;

    auto common = [&](CLI::App *sub, bool needs_config) {
        auto *c = sub->add_option("--config", opt.config_path, "Run configuration (JSON)");
        if (needs_config) c->required()->check(CLI::ExistingFile);
        sub->add_option("--out", outdir, "Output directory");
        sub->add_option("--seed", seed, "Optimizer seed");
        sub->add_option("--workers", workers, "Sweep worker threads (0 = all cores)");
    };
    auto *syn = app.add_subcommand("synthesize", "Optimize one pulse per configured gate");
    common(syn, true);
    auto *eva = app.add_subcommand("evaluate", "Shifted-gate infidelity and perturbative prediction for a pulse");
    common(eva, true);
    eva->add_option("--pulse", opt.pulse_path, "Pulse file")->required()->check(CLI::ExistingFile);
    eva->add_option("--eps-over-xi", opt.eps_over_xi, "Frequency shift in units of the self-Kerr")->required();
    auto *swp = app.add_subcommand("sweep", "Heatmap or scaling sweep");
    common(swp, true);
    swp->add_option("--kind", opt.kind, "heatmap or scaling")
        ->required()
        ->check(CLI::IsMember({"heatmap", "scaling"}));
    auto *slp = app.add_subcommand("slope", "Re-fit slopes from a scaling CSV");
    common(slp, false);
    slp->add_option("--in", opt.csv_path, "Scaling CSV")->required()->check(CLI::ExistingFile);

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }
    opt.out = outdir;
    opt.seed = seed;
    opt.workers = workers;

    try {
        RunConfig cfg;
        if (!opt.config_path.empty()) cfg = load_config(opt.config_path);
        apply_overrides(cfg, opt, env);
        if (syn->parsed()) return cmd_synthesize(cfg, out, err);
        if (eva->parsed()) return cmd_evaluate(cfg, opt.pulse_path, opt.eps_over_xi, out);
        if (swp->parsed()) return cmd_sweep(cfg, opt.kind, out, err);
        return cmd_slope(opt.csv_path, cfg.scaling.slope_window, out);
    } catch (const ConfigError &e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const UsageError &e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const Error &e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    }
}

}  // namespace qudit::cli
