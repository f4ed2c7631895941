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

// Run configuration and pulse files. Both are JSON; frequencies are GHz and
// times ns at this boundary, converted to rad/ns when domain objects are built.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qudit/control.hpp"
#include "qudit/core.hpp"
#include "qudit/operators.hpp"
#include "qudit/pulses.hpp"
#include "qudit/sweeps.hpp"

namespace qudit {

inline constexpr int kPulseFormatVersion = 1;

using Json = nlohmann::json;

namespace detail {

inline std::uint64_t fnv1a(const std::string &s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xf];
    return s;
}

/// Typed lookup with a diagnostic naming the dotted field path.
template <typename T>
T field(const Json &obj, const std::string &key, const std::string &path) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!obj.is_object() || !obj.contains(key)) throw ConfigError("missing field '" + where + "'");
    const Json &v = obj.at(key);
    if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError("field '" + where + "': expected a number");
    } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError("field '" + where + "': expected an integer");
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("field '" + where + "': expected a string");
    }
    try {
        return v.get<T>();
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError("field '" + where + "': " + e.what());
    }
}

template <typename T>
T field_or(const Json &obj, const std::string &key, const std::string &path, T fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    return field<T>(obj, key, path);
}

inline Json parse_json_text(const std::string &text, const std::string &what) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
        throw ConfigError(what + ": " + e.what());
    }
}

inline std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace detail

/// Stable identifier of an oscillator definition (exact bit patterns of the
/// rad/ns values).
inline std::string oscillator_hash(const OscillatorSpec &s) {
    const std::string canon = "essential_levels=" + std::to_string(s.essential_levels) +
                              ";guard_levels=" + std::to_string(s.guard_levels) +
                              ";self_kerr=" + format_double(s.self_kerr) +
                              ";rotation_freq=" + format_double(s.rotation_freq);
    return detail::hex64(detail::fnv1a(canon));
}

struct GateConfig {
    int from = 0;
    int to = 1;
    double duration_ns = 0.0;
    /// Defaults to to + 1 when absent.
    std::optional<int> essential_levels;

    std::string label() const { return "swap_" + std::to_string(from) + "_" + std::to_string(to); }
    bool operator==(const GateConfig &) const = default;
};

struct HeatmapConfig {
    std::string gate;
    int occ_max = 50;
    std::vector<std::pair<double, double>> exponents = default_heatmap_exponents();
    bool operator==(const HeatmapConfig &) const = default;
};

struct ScalingConfig {
    /// Empty selects every configured gate.
    std::vector<std::string> gates;
    std::optional<std::vector<double>> grid;
    std::pair<double, double> slope_window{std::pow(10.0, -4.05), std::pow(10.0, -3.95)};
    double anchor = 1e-4;
    SweepReference reference = SweepReference::kUnshiftedPulse;
    bool operator==(const ScalingConfig &) const = default;
};

/// Everything a CLI run needs. Values are kept in the units of the file.
struct RunConfig {
    double self_kerr_ghz = 0.22;
    double rotation_freq_ghz = 4.8;
    int guard_levels = 1;
    std::vector<GateConfig> gates;
    int segments = 10;
    double max_amplitude_ghz = 0.03;
    std::optional<std::vector<double>> carriers_ghz;
    int max_iterations = 200;
    double guard_weight = 1.0;
    double convergence_tol = 1e-9;
    double infidelity_threshold = 5e-3;
    double steps_per_ns = 0.0;
    double unitarity_tol = 1e-10;
    std::optional<HeatmapConfig> heatmap;
    ScalingConfig scaling;
    std::string output_dir = "out";
    std::uint64_t seed = 1234;
    unsigned workers = 0;

    bool operator==(const RunConfig &) const = default;

    OscillatorSpec oscillator_for(const GateConfig &g) const {
        OscillatorSpec s;
        s.essential_levels = g.essential_levels.value_or(g.to + 1);
        s.guard_levels = guard_levels;
        s.self_kerr = ghz_to_rad_per_ns(self_kerr_ghz);
        s.rotation_freq = ghz_to_rad_per_ns(rotation_freq_ghz);
        return s;
    }

    GateTask task_for(const GateConfig &g) const {
        GateTask t{g.from, g.to, g.duration_ns, oscillator_for(g)};
        t.validate();
        return t;
    }

    const GateConfig &gate(const std::string &label) const {
        for (const auto &g : gates) {
            if (g.label() == label) return g;
        }
        throw ConfigError("no gate labelled '" + label + "' in config");
    }

    PropagationSettings propagation() const { return {steps_per_ns, unitarity_tol, 0}; }

    OptimizerSettings optimizer() const {
        OptimizerSettings o;
        o.max_iterations = max_iterations;
        o.guard_weight = guard_weight;
        o.seed = seed;
        o.convergence_tol = convergence_tol;
        return o;
    }

    ControlProblem problem_for(const GateConfig &g) const {
        ControlProblem p = ControlProblem::for_task(task_for(g), segments, ghz_to_rad_per_ns(max_amplitude_ghz),
                                                    propagation(), guard_weight);
        if (carriers_ghz) {
            p.carriers.clear();
            for (double c : *carriers_ghz) p.carriers.push_back(ghz_to_rad_per_ns(c));
        }
        return p;
    }
};

inline const char *to_string(SweepReference r) { return r == SweepReference::kTarget ? "target" : "unshifted_pulse"; }

inline RunConfig config_from_json(const Json &j) {
    using detail::field;
    using detail::field_or;
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    RunConfig c;
    const Json osc = j.value("oscillator", Json::object());
    c.self_kerr_ghz = field<double>(osc, "self_kerr_ghz", "oscillator");
    c.rotation_freq_ghz = field_or<double>(osc, "rotation_freq_ghz", "oscillator", c.rotation_freq_ghz);
    c.guard_levels = field_or<int>(osc, "guard_levels", "oscillator", c.guard_levels);
    if (!(c.self_kerr_ghz > 0.0)) throw ConfigError("field 'oscillator.self_kerr_ghz': must be > 0");
    if (c.guard_levels < 0) throw ConfigError("field 'oscillator.guard_levels': must be >= 0");

    if (j.contains("gates")) {
        if (!j.at("gates").is_array()) throw ConfigError("field 'gates': expected an array");
        int idx = 0;
        for (const auto &g : j.at("gates")) {
            const std::string path = "gates[" + std::to_string(idx++) + "]";
            GateConfig gc;
            gc.from = field<int>(g, "from", path);
            gc.to = field<int>(g, "to", path);
            gc.duration_ns = field<double>(g, "duration_ns", path);
            if (g.contains("essential_levels")) gc.essential_levels = field<int>(g, "essential_levels", path);
            try {
                c.task_for(gc);
            } catch (const Error &e) {
                throw ConfigError("field '" + path + "': " + e.what());
            }
            c.gates.push_back(gc);
        }
    }

    const Json pulse = j.value("pulse", Json::object());
    c.segments = field_or<int>(pulse, "segments", "pulse", c.segments);
    c.max_amplitude_ghz = field_or<double>(pulse, "max_amplitude_ghz", "pulse", c.max_amplitude_ghz);
    if (pulse.contains("carriers_ghz")) c.carriers_ghz = field<std::vector<double>>(pulse, "carriers_ghz", "pulse");
    if (c.segments < 1) throw ConfigError("field 'pulse.segments': must be >= 1");
    if (!(c.max_amplitude_ghz > 0.0)) throw ConfigError("field 'pulse.max_amplitude_ghz': must be > 0");

    const Json opt = j.value("optimizer", Json::object());
    c.max_iterations = field_or<int>(opt, "max_iterations", "optimizer", c.max_iterations);
    c.guard_weight = field_or<double>(opt, "guard_weight", "optimizer", c.guard_weight);
    c.convergence_tol = field_or<double>(opt, "convergence_tol", "optimizer", c.convergence_tol);
    c.infidelity_threshold = field_or<double>(opt, "infidelity_threshold", "optimizer", c.infidelity_threshold);
    if (c.max_iterations < 0) throw ConfigError("field 'optimizer.max_iterations': must be >= 0");

    const Json prop = j.value("propagation", Json::object());
    c.steps_per_ns = field_or<double>(prop, "steps_per_ns", "propagation", c.steps_per_ns);
    c.unitarity_tol = field_or<double>(prop, "unitarity_tol", "propagation", c.unitarity_tol);

    if (j.contains("heatmap")) {
        const Json &h = j.at("heatmap");
        HeatmapConfig hc;
        hc.gate = field<std::string>(h, "gate", "heatmap");
        hc.occ_max = field_or<int>(h, "occ_max", "heatmap", hc.occ_max);
        if (h.contains("exponents")) {
            hc.exponents = field<std::vector<std::pair<double, double>>>(h, "exponents", "heatmap");
        }
        c.heatmap = hc;
    }
    if (j.contains("scaling")) {
        const Json &s = j.at("scaling");
        c.scaling.gates = field_or<std::vector<std::string>>(s, "gates", "scaling", {});
        if (s.contains("grid")) c.scaling.grid = field<std::vector<double>>(s, "grid", "scaling");
        if (s.contains("slope_window")) {
            const auto w = field<std::vector<double>>(s, "slope_window", "scaling");
            if (w.size() != 2 || !(w[0] > 0.0 && w[1] > w[0])) {
                throw ConfigError("field 'scaling.slope_window': expected [lo, hi] with 0 < lo < hi");
            }
            c.scaling.slope_window = {w[0], w[1]};
        }
        c.scaling.anchor = field_or<double>(s, "anchor", "scaling", c.scaling.anchor);
        const std::string ref = field_or<std::string>(s, "reference", "scaling", to_string(c.scaling.reference));
        if (ref == "unshifted_pulse") {
            c.scaling.reference = SweepReference::kUnshiftedPulse;
        } else if (ref == "target") {
            c.scaling.reference = SweepReference::kTarget;
        } else {
            throw ConfigError("field 'scaling.reference': expected 'unshifted_pulse' or 'target'");
        }
    }
    c.output_dir = field_or<std::string>(j, "output_dir", "", c.output_dir);
    c.seed = field_or<std::uint64_t>(j, "seed", "", c.seed);
    c.workers = field_or<unsigned>(j, "workers", "", c.workers);
    return c;
}

inline Json config_to_json(const RunConfig &c) {
    Json j;
    j["oscillator"] = {{"self_kerr_ghz", c.self_kerr_ghz},
                       {"rotation_freq_ghz", c.rotation_freq_ghz},
                       {"guard_levels", c.guard_levels}};
    Json gates = Json::array();
    for (const auto &g : c.gates) {
        Json gj = {{"from", g.from}, {"to", g.to}, {"duration_ns", g.duration_ns}};
        if (g.essential_levels) gj["essential_levels"] = *g.essential_levels;
        gates.push_back(gj);
    }
    j["gates"] = gates;
    j["pulse"] = {{"segments", c.segments}, {"max_amplitude_ghz", c.max_amplitude_ghz}};
    if (c.carriers_ghz) j["pulse"]["carriers_ghz"] = *c.carriers_ghz;
    j["optimizer"] = {{"max_iterations", c.max_iterations},
                      {"guard_weight", c.guard_weight},
                      {"convergence_tol", c.convergence_tol},
                      {"infidelity_threshold", c.infidelity_threshold}};
    j["propagation"] = {{"steps_per_ns", c.steps_per_ns}, {"unitarity_tol", c.unitarity_tol}};
    if (c.heatmap) {
        j["heatmap"] = {{"gate", c.heatmap->gate}, {"occ_max", c.heatmap->occ_max}, {"exponents", c.heatmap->exponents}};
    }
    Json s = {{"gates", c.scaling.gates},
              {"slope_window", {c.scaling.slope_window.first, c.scaling.slope_window.second}},
              {"anchor", c.scaling.anchor},
              {"reference", to_string(c.scaling.reference)}};
    if (c.scaling.grid) s["grid"] = *c.scaling.grid;
    j["scaling"] = s;
    j["output_dir"] = c.output_dir;
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    return j;
}

inline RunConfig parse_config(const std::string &text) { return config_from_json(detail::parse_json_text(text, "config")); }

inline std::string serialize_config(const RunConfig &c) { return config_to_json(c).dump(2) + "\n"; }

inline RunConfig load_config(const std::string &path) { return parse_config(detail::read_file(path)); }

/// Hash of the serialized configuration with the fields that cannot change
/// results (output_dir, workers) reset to their defaults.
inline std::string config_hash(const RunConfig &c) {
    RunConfig k = c;
    k.output_dir = RunConfig{}.output_dir;
    k.workers = RunConfig{}.workers;
    return detail::hex64(detail::fnv1a(serialize_config(k)));
}

// Pulse files ---------------------------------------------------------------

struct PulseFile {
    GateTask task;
    PulseSet pulse;
    std::string oscillator_hash;
    Json synthesis = Json::object();
};

/// Everything is stored in rad/ns so that the pulse and the oscillator hash
/// reload bit-exactly.
inline Json pulse_to_json(const PulseFile &pf) {
    Json j;
    j["format_version"] = kPulseFormatVersion;
    j["gate"] = {{"label", pf.task.label()},
                 {"from", pf.task.swap_from},
                 {"to", pf.task.swap_to},
                 {"duration_ns", pf.task.duration}};
    const auto &o = pf.task.oscillator;
    j["oscillator"] = {{"essential_levels", o.essential_levels},
                       {"guard_levels", o.guard_levels},
                       {"self_kerr_rad_per_ns", o.self_kerr},
                       {"rotation_freq_rad_per_ns", o.rotation_freq}};
    j["oscillator_hash"] = oscillator_hash(o);
    j["basis"] = {{"segments", pf.pulse.basis.segments()}, {"duration_ns", pf.pulse.basis.duration()}};
    j["carriers_rad_per_ns"] = pf.pulse.carriers;
    j["coeffs"] = std::vector<double>(pf.pulse.coeffs.data(), pf.pulse.coeffs.data() + pf.pulse.coeffs.size());
    j["max_amplitude_rad_per_ns"] = pf.pulse.max_amplitude;
    j["synthesis"] = pf.synthesis;
    return j;
}

inline PulseFile pulse_from_json(const Json &j) {
    using detail::field;
    if (!j.is_object()) throw ConfigError("pulse file: top level must be an object");
    const int version = field<int>(j, "format_version", "");
    if (version != kPulseFormatVersion) {
        throw ConfigError("pulse file: format_version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kPulseFormatVersion) + ")");
    }
    PulseFile pf;
    const Json g = field<Json>(j, "gate", "");
    const Json o = field<Json>(j, "oscillator", "");
    pf.task.swap_from = field<int>(g, "from", "gate");
    pf.task.swap_to = field<int>(g, "to", "gate");
    pf.task.duration = field<double>(g, "duration_ns", "gate");
    pf.task.oscillator.essential_levels = field<int>(o, "essential_levels", "oscillator");
    pf.task.oscillator.guard_levels = field<int>(o, "guard_levels", "oscillator");
    pf.task.oscillator.self_kerr = field<double>(o, "self_kerr_rad_per_ns", "oscillator");
    pf.task.oscillator.rotation_freq = field<double>(o, "rotation_freq_rad_per_ns", "oscillator");
    try {
        pf.task.validate();
    } catch (const Error &e) {
        throw ConfigError(std::string("pulse file: ") + e.what());
    }
    pf.oscillator_hash = field<std::string>(j, "oscillator_hash", "");
    if (pf.oscillator_hash != oscillator_hash(pf.task.oscillator)) {
        throw ConfigError("pulse file: oscillator_hash does not match the stored oscillator");
    }
    const Json b = field<Json>(j, "basis", "");
    pf.pulse.basis = BSplineBasis(field<int>(b, "segments", "basis"), field<double>(b, "duration_ns", "basis"));
    pf.pulse.carriers = field<std::vector<double>>(j, "carriers_rad_per_ns", "");
    const auto coeffs = field<std::vector<double>>(j, "coeffs", "");
    pf.pulse.coeffs = Eigen::Map<const Eigen::VectorXd>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
    pf.pulse.max_amplitude = field<double>(j, "max_amplitude_rad_per_ns", "");
    try {
        pf.pulse.validate();
    } catch (const Error &e) {
        throw ConfigError(std::string("pulse file: ") + e.what());
    }
    if (j.contains("synthesis")) pf.synthesis = j.at("synthesis");
    return pf;
}

inline void write_text_file(const std::string &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << text;
}

inline void save_pulse(const std::string &path, const PulseFile &pf) { write_text_file(path, pulse_to_json(pf).dump(2) + "\n"); }

inline PulseFile load_pulse(const std::string &path) {
    return pulse_from_json(detail::parse_json_text(detail::read_file(path), "pulse file '" + path + "'"));
}

/// iteration,infidelity,guard_penalty,total,gradient_norm
inline void write_trace_csv(const std::vector<TraceRow> &rows, std::ostream &os) {
    os << "iteration,infidelity,guard_penalty,total,gradient_norm\n";
    for (const auto &r : rows) {
        os << r.report.iteration << ',' << format_double(r.report.infidelity) << ','
           << format_double(r.report.guard_penalty) << ',' << format_double(r.report.total) << ','
           << format_double(r.gradient_norm) << '\n';
    }
}

}  // namespace qudit
