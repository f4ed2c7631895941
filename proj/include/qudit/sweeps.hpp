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

// Batch experiments over spectator shifts: occupation heatmaps, eps-scaling
// curves, power-law slope fits and anchor rescaling. Cells sharing the same
// shift are simulated once.

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qudit/core.hpp"
#include "qudit/operators.hpp"
#include "qudit/spectator.hpp"

namespace qudit {

inline constexpr const char *kVersion = "0.1.0";

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Results are
/// stored by index, so the output does not depend on scheduling. The first
/// exception thrown by any task is rethrown after all threads join.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t count, unsigned workers, Fn &&fn) {
    std::vector<T> out(count);
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::atomic<bool> failed{false};
    auto body = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count || failed.load()) return;
            try {
                out[i] = fn(i);
            } catch (...) {
                if (!failed.exchange(true)) err = std::current_exception();
                return;
            }
        }
    };
    if (workers <= 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
        for (auto &t : pool) t.join();
    }
    if (err) std::rethrow_exception(err);
    return out;
}

/// A synthesized gate ready for evaluation.
struct GatePulse {
    std::string label;
    GateTask task;
    PulseSet pulse;
};

struct HeatmapSpec {
    GatePulse gate;
    int occ_max = 50;
    /// (e1, e2): cross-Kerr to spectator j is 10^{e_j} * xi.
    std::vector<std::pair<double, double>> cross_kerr_exponents;

    void validate() const {
        if (occ_max < 1) throw DomainError("HeatmapSpec: occ_max must be >= 1");
        if (cross_kerr_exponents.empty()) throw DomainError("HeatmapSpec: no exponent pairs");
        for (const auto &[a, b] : cross_kerr_exponents) {
            if (!std::isfinite(a) || !std::isfinite(b)) throw DomainError("HeatmapSpec: exponents must be finite");
        }
    }
};

/// Exponents {0, -0.5, ..., -3.5} on both axes: 64 panels.
inline std::vector<std::pair<double, double>> default_heatmap_exponents() {
    std::vector<std::pair<double, double>> out;
    for (int i = 0; i < 8; ++i) {
        // 0.0 - x keeps the first exponent +0 rather than -0.
        for (int j = 0; j < 8; ++j) out.emplace_back(0.0 - 0.5 * i, 0.0 - 0.5 * j);
    }
    return out;
}

/// What the shifted evolution is scored against.
enum class SweepReference {
    /// The same pulse without shift (F = 1 at eps = 0).
    kUnshiftedPulse,
    /// The ideal SWAP; curves then carry the synthesis floor.
    kTarget,
};

struct ScalingSpec {
    std::vector<GatePulse> gates;
    std::vector<double> eps_over_xi_grid;
    std::pair<double, double> slope_window{std::pow(10.0, -4.05), std::pow(10.0, -3.95)};
    double anchor = 1e-4;
    SweepReference reference = SweepReference::kUnshiftedPulse;

    void validate() const {
        if (eps_over_xi_grid.empty()) throw DomainError("ScalingSpec: empty grid");
        for (std::size_t i = 0; i < eps_over_xi_grid.size(); ++i) {
            if (!(eps_over_xi_grid[i] > 0.0)) throw DomainError("ScalingSpec: grid values must be > 0");
            if (i > 0 && !(eps_over_xi_grid[i] > eps_over_xi_grid[i - 1])) {
                throw DomainError("ScalingSpec: grid must be strictly ascending");
            }
        }
    }
};

/// `count` log-spaced values over [lo, hi], endpoints included.
inline std::vector<double> log_grid(double lo, double hi, int count) {
    if (!(lo > 0.0 && hi > lo) || count < 2) throw DomainError("log_grid: need 0 < lo < hi and count >= 2");
    std::vector<double> out;
    const double a = std::log10(lo), b = std::log10(hi);
    for (int i = 0; i < count; ++i) out.push_back(std::pow(10.0, a + (b - a) * i / (count - 1)));
    return out;
}

/// 40 log-spaced points over [1e-5, 1e-1] plus five log-spaced points across
/// the slope window (its endpoints included).
inline std::vector<double> default_scaling_grid(std::pair<double, double> window = {std::pow(10.0, -4.05),
                                                                                    std::pow(10.0, -3.95)}) {
    std::vector<double> g = log_grid(1e-5, 1e-1, 40);
    const auto w = log_grid(window.first, window.second, 5);
    g.insert(g.end(), w.begin(), w.end());
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
}

enum class SweepKind { kHeatmap, kScaling };

inline const char *to_string(SweepKind k) { return k == SweepKind::kHeatmap ? "heatmap" : "scaling"; }

/// One CSV row. Heatmap rows fill every column; scaling rows leave the
/// exponent and occupation columns empty.
struct SweepRow {
    std::string gate;
    std::optional<double> exp1, exp2;
    std::optional<int> n1, n2;
    double eps_over_xi = 0.0;
    double infidelity = 0.0;
};

struct SweepResult {
    SweepKind kind = SweepKind::kHeatmap;
    std::vector<SweepRow> rows;
    nlohmann::json provenance;
    int failed_cells = 0;
};

namespace detail {

struct CellOutcome {
    double infidelity = std::numeric_limits<double>::quiet_NaN();
    bool ok = false;
    std::string error;
};

inline double clamp_unit(double x) { return std::clamp(x, 0.0, 1.0); }

inline nlohmann::json settings_json(const PropagationSettings &s) {
    return {{"steps_per_ns", s.steps_per_ns}, {"unitarity_tol", s.unitarity_tol}};
}

}  // namespace detail

inline SweepResult run_heatmap(const HeatmapSpec &spec, const PropagationSettings &settings, unsigned workers = 1,
                               nlohmann::json provenance = nlohmann::json::object()) {
    spec.validate();
    const GateTask &task = spec.gate.task;
    task.validate();
    const double xi = task.oscillator.self_kerr;

    struct Cell {
        double e1, e2;
        int n1, n2;
        double eps;
    };
    std::vector<Cell> cells;
    for (const auto &[e1, e2] : spec.cross_kerr_exponents) {
        const double k1 = std::pow(10.0, e1) * xi;
        const double k2 = std::pow(10.0, e2) * xi;
        for (int n2 = 0; n2 <= spec.occ_max; ++n2) {
            for (int n1 = 0; n1 <= spec.occ_max; ++n1) {
                const double eps = epsilon_shift(SpectatorConfig({{k1, n1}, {k2, n2}}));
                cells.push_back({e1, e2, n1, n2, eps});
            }
        }
    }
    // Equal shifts are one simulation.
    std::map<std::uint64_t, std::size_t> slot;
    std::vector<double> unique_eps;
    for (const auto &c : cells) {
        if (slot.emplace(std::bit_cast<std::uint64_t>(c.eps), unique_eps.size()).second) unique_eps.push_back(c.eps);
    }
    const ShiftedFidelity sim(spec.gate.pulse, task, settings);
    const auto outcomes = parallel_map<detail::CellOutcome>(unique_eps.size(), workers, [&](std::size_t i) {
        detail::CellOutcome o;
        try {
            o.infidelity = detail::clamp_unit(sim.infidelity(unique_eps[i]));
            o.ok = true;
        } catch (const PropagationError &e) {
            o.error = e.what();
        }
        return o;
    });

    SweepResult res;
    res.kind = SweepKind::kHeatmap;
    res.rows.reserve(cells.size());
    nlohmann::json failures = nlohmann::json::array();
    for (const auto &c : cells) {
        const auto &o = outcomes[slot.at(std::bit_cast<std::uint64_t>(c.eps))];
        if (!o.ok) {
            ++res.failed_cells;
            failures.push_back({{"exp1", c.e1}, {"exp2", c.e2}, {"n1", c.n1}, {"n2", c.n2}, {"error", o.error}});
        }
        res.rows.push_back({spec.gate.label, c.e1, c.e2, c.n1, c.n2, c.eps / xi, o.infidelity});
    }
    provenance["kind"] = "heatmap";
    provenance["version"] = kVersion;
    provenance["gate"] = spec.gate.label;
    provenance["occ_max"] = spec.occ_max;
    provenance["cross_kerr_exponents"] = spec.cross_kerr_exponents;
    provenance["propagation"] = detail::settings_json(settings);
    provenance["unique_shifts"] = unique_eps.size();
    provenance["failures"] = failures;
    res.provenance = std::move(provenance);
    return res;
}

inline SweepResult run_scaling(const ScalingSpec &spec, const PropagationSettings &settings, unsigned workers = 1,
                               nlohmann::json provenance = nlohmann::json::object()) {
    spec.validate();
    std::vector<ShiftedFidelity> sims;
    sims.reserve(spec.gates.size());
    for (const auto &g : spec.gates) sims.emplace_back(g.pulse, g.task, settings);

    const std::size_t npts = spec.eps_over_xi_grid.size();
    const auto outcomes = parallel_map<detail::CellOutcome>(spec.gates.size() * npts, workers, [&](std::size_t i) {
        const auto &sim = sims[i / npts];
        const double eps = spec.eps_over_xi_grid[i % npts] * sim.task().oscillator.self_kerr;
        detail::CellOutcome o;
        try {
            const double v = spec.reference == SweepReference::kTarget ? sim.target_infidelity(eps) : sim.infidelity(eps);
            o.infidelity = detail::clamp_unit(v);
            o.ok = true;
        } catch (const PropagationError &e) {
            o.error = e.what();
        }
        return o;
    });

    SweepResult res;
    res.kind = SweepKind::kScaling;
    nlohmann::json failures = nlohmann::json::array();
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto &g = spec.gates[i / npts];
        const double x = spec.eps_over_xi_grid[i % npts];
        if (!outcomes[i].ok) {
            ++res.failed_cells;
            failures.push_back({{"gate", g.label}, {"eps_over_xi", x}, {"error", outcomes[i].error}});
        }
        SweepRow row;
        row.gate = g.label;
        row.eps_over_xi = x;
        row.infidelity = outcomes[i].infidelity;
        res.rows.push_back(std::move(row));
    }
    provenance["kind"] = "scaling";
    provenance["version"] = kVersion;
    nlohmann::json labels = nlohmann::json::array();
    for (const auto &g : spec.gates) labels.push_back(g.label);
    provenance["gates"] = labels;
    provenance["eps_over_xi_grid"] = spec.eps_over_xi_grid;
    provenance["slope_window"] = {spec.slope_window.first, spec.slope_window.second};
    provenance["anchor"] = spec.anchor;
    provenance["reference"] = spec.reference == SweepReference::kTarget ? "target" : "unshifted_pulse";
    provenance["propagation"] = detail::settings_json(settings);
    provenance["failures"] = failures;
    res.provenance = std::move(provenance);
    return res;
}

/// Infidelity as a function of eps/xi for one gate.
struct Curve {
    std::string label;
    std::vector<double> eps_over_xi;
    std::vector<double> infidelity;
};

/// Group scaling rows by gate, preserving first-appearance order.
inline std::vector<Curve> curves_from(const SweepResult &res) {
    std::vector<Curve> out;
    for (const auto &r : res.rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const Curve &c) { return c.label == r.gate; });
        if (it == out.end()) {
            out.push_back({r.gate, {}, {}});
            it = std::prev(out.end());
        }
        it->eps_over_xi.push_back(r.eps_over_xi);
        it->infidelity.push_back(r.infidelity);
    }
    return out;
}

/// Least-squares slope of log10(infidelity) against log10(eps/xi) over the
/// points inside the closed window.
inline double fit_slope(const Curve &curve, std::pair<double, double> window) {
    if (curve.eps_over_xi.size() != curve.infidelity.size()) throw DimensionError("fit_slope: ragged curve");
    const double lo = window.first * (1.0 - 1e-12), hi = window.second * (1.0 + 1e-12);
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < curve.eps_over_xi.size(); ++i) {
        const double x = curve.eps_over_xi[i], y = curve.infidelity[i];
        if (x >= lo && x <= hi && x > 0.0 && y > 0.0 && std::isfinite(y)) pts.emplace_back(std::log10(x), std::log10(y));
    }
    if (pts.size() < 2) {
        throw WindowError("fit_slope: fewer than two usable points inside the window for '" + curve.label +
                          "'; densify the eps grid");
    }
    double mx = 0.0, my = 0.0;
    for (const auto &[x, y] : pts) {
        mx += x;
        my += y;
    }
    mx /= pts.size();
    my /= pts.size();
    double sxy = 0.0, sxx = 0.0;
    for (const auto &[x, y] : pts) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if (sxx == 0.0) throw WindowError("fit_slope: window points share one abscissa");
    return sxy / sxx;
}

/// Value of a curve at x: exact grid hit, otherwise linear interpolation in
/// log-log coordinates between the bracketing points.
inline double curve_value_at(const Curve &c, double x) {
    const auto &xs = c.eps_over_xi;
    if (xs.empty() || x < xs.front() || x > xs.back()) throw DomainError("curve_value_at: anchor outside grid range");
    const auto it = std::lower_bound(xs.begin(), xs.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - xs.begin());
    if (xs[i] == x) return c.infidelity[i];
    const double x0 = std::log10(xs[i - 1]), x1 = std::log10(xs[i]);
    const double y0 = std::log10(c.infidelity[i - 1]), y1 = std::log10(c.infidelity[i]);
    const double f = (std::log10(x) - x0) / (x1 - x0);
    return std::pow(10.0, y0 + f * (y1 - y0));
}

/// Divide every curve by its own value at the anchor.
inline std::vector<Curve> rescale_collapse(std::vector<Curve> curves, double anchor) {
    for (auto &c : curves) {
        const double v = curve_value_at(c, anchor);
        if (!(v > 0.0)) throw DomainError("rescale_collapse: curve '" + c.label + "' vanishes at the anchor");
        for (auto &y : c.infidelity) y /= v;
    }
    return curves;
}

// CSV -----------------------------------------------------------------------

inline constexpr const char *kSweepCsvHeader = "gate,exp1,exp2,n1,n2,eps_over_xi,infidelity";

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

inline void write_csv(const SweepResult &res, std::ostream &os) {
    os << kSweepCsvHeader << '\n';
    for (const auto &r : res.rows) {
        os << r.gate << ',' << (r.exp1 ? format_double(*r.exp1) : "") << ',' << (r.exp2 ? format_double(*r.exp2) : "")
           << ',' << (r.n1 ? std::to_string(*r.n1) : "") << ',' << (r.n2 ? std::to_string(*r.n2) : "") << ','
           << format_double(r.eps_over_xi) << ',' << format_double(r.infidelity) << '\n';
    }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string &line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double_field(const std::string &s, const char *column, int line) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
        throw ConfigError("sweep CSV line " + std::to_string(line) + ": bad value in column '" + column + "'");
    }
    return v;
}

}  // namespace detail

/// Parse a sweep CSV written by write_csv. Kind is inferred: rows with
/// occupation columns are heatmap rows.
inline SweepResult read_csv(std::istream &is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("sweep CSV: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kSweepCsvHeader) {
        const auto got = detail::split_csv_line(line);
        const auto want = detail::split_csv_line(kSweepCsvHeader);
        for (std::size_t i = 0; i < want.size(); ++i) {
            if (i >= got.size() || got[i] != want[i]) {
                throw ConfigError("sweep CSV: expected column '" + want[i] + "' at position " + std::to_string(i));
            }
        }
        throw ConfigError("sweep CSV: unexpected extra columns");
    }
    SweepResult res;
    res.kind = SweepKind::kScaling;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 7) throw ConfigError("sweep CSV line " + std::to_string(lineno) + ": expected 7 fields");
        SweepRow r;
        r.gate = f[0];
        if (!f[1].empty()) r.exp1 = detail::parse_double_field(f[1], "exp1", lineno);
        if (!f[2].empty()) r.exp2 = detail::parse_double_field(f[2], "exp2", lineno);
        if (!f[3].empty()) r.n1 = static_cast<int>(detail::parse_double_field(f[3], "n1", lineno));
        if (!f[4].empty()) r.n2 = static_cast<int>(detail::parse_double_field(f[4], "n2", lineno));
        r.eps_over_xi = detail::parse_double_field(f[5], "eps_over_xi", lineno);
        r.infidelity = detail::parse_double_field(f[6], "infidelity", lineno);
        if (r.n1) res.kind = SweepKind::kHeatmap;
        res.rows.push_back(std::move(r));
    }
    return res;
}

}  // namespace qudit
