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

// Single-mode operators and Hamiltonians of the target oscillator. Spectator
// modes enter only through the scalar frequency shift they induce.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qudit/core.hpp"

namespace qudit {

/// Target-mode definition. Frequencies are angular, rad/ns (hbar = 1).
struct OscillatorSpec {
    int essential_levels = 2;
    int guard_levels = 1;
    double self_kerr = 0.0;
    /// Rotating-frame frequency. Kept for bookkeeping; dynamics are written in
    /// the rotating frame and never read it.
    double rotation_freq = 0.0;

    int levels() const { return essential_levels + guard_levels; }

    void validate() const {
        if (essential_levels < 2) throw DomainError("OscillatorSpec: essential_levels must be >= 2");
        if (guard_levels < 0) throw DomainError("OscillatorSpec: guard_levels must be >= 0");
        check_levels(levels(), 2, "OscillatorSpec");
        if (!(self_kerr > 0.0)) throw DomainError("OscillatorSpec: self_kerr must be > 0");
    }

    bool operator==(const OscillatorSpec &) const = default;
};

struct SpectatorMode {
    double cross_kerr = 0.0;  // rad/ns
    int occupation = 0;
};

/// Spectators in Fock states. Downstream code only ever reads epsilon_shift().
class SpectatorConfig {
   public:
    SpectatorConfig() = default;
    explicit SpectatorConfig(std::vector<SpectatorMode> modes) : modes_(std::move(modes)) {
        for (const auto &m : modes_) {
            if (!(m.cross_kerr >= 0.0)) throw DomainError("SpectatorConfig: cross_kerr must be >= 0");
            if (m.occupation < 0) throw DomainError("SpectatorConfig: occupation must be >= 0");
        }
    }

    /// epsilon = sum_j xi_j n_j. Modes with bit-equal cross-Kerr are merged
    /// first (xi * sum n), so the result depends only on the multiset of
    /// (xi, n) pairs and equal-coupling occupations can be exchanged exactly.
    double epsilon_shift() const {
        std::map<double, long long> by_kerr;
        for (const auto &m : modes_) by_kerr[m.cross_kerr] += m.occupation;
        double eps = 0.0;
        for (const auto &[kerr, n] : by_kerr) eps += kerr * static_cast<double>(n);
        return eps;
    }

   private:
    std::vector<SpectatorMode> modes_;
};

inline double epsilon_shift(const SpectatorConfig &cfg) { return cfg.epsilon_shift(); }

/// SWAP between two essential levels, realized over a fixed duration.
struct GateTask {
    int swap_from = 0;
    int swap_to = 1;
    double duration = 0.0;  // ns
    OscillatorSpec oscillator;

    void validate() const {
        oscillator.validate();
        if (swap_from == swap_to) throw DomainError("GateTask: degenerate swap (i == j)");
        if (swap_from < 0 || swap_from >= swap_to || swap_to >= oscillator.essential_levels) {
            throw DomainError("GateTask: need 0 <= i < j < essential_levels");
        }
        if (!(duration > 0.0)) throw DomainError("GateTask: duration must be > 0");
    }

    int essential_dim() const { return oscillator.essential_levels; }
    int levels() const { return oscillator.levels(); }

    std::string label() const { return "swap_" + std::to_string(swap_from) + "_" + std::to_string(swap_to); }
};

inline RMatrix number_operator(int n) {
    check_levels(n, 1, "number_operator");
    RMatrix m = RMatrix::Zero(n, n);
    for (int k = 0; k < n; ++k) m(k, k) = k;
    return m;
}

/// Truncated annihilation operator: entry (k, k+1) = sqrt(k+1).
inline RMatrix lowering_operator(int n) {
    check_levels(n, 2, "lowering_operator");
    RMatrix m = RMatrix::Zero(n, n);
    for (int k = 0; k + 1 < n; ++k) m(k, k + 1) = std::sqrt(static_cast<double>(k + 1));
    return m;
}

/// Diagonal energy of level k under H0 = -(xi/2)(n^2 - n).
inline double h0_energy(double self_kerr, int k) {
    const double kd = static_cast<double>(k);
    return -0.5 * self_kerr * (kd * kd - kd);
}

inline RMatrix h0(const OscillatorSpec &spec) {
    spec.validate();
    const int n = spec.levels();
    RMatrix m = RMatrix::Zero(n, n);
    for (int k = 0; k < n; ++k) m(k, k) = h0_energy(spec.self_kerr, k);
    return m;
}

/// V = -n, the operator multiplying the spectator shift.
inline RMatrix shift_operator(int n) { return -number_operator(n); }

/// H_eff = H0 + eps V.
inline RMatrix h_eff(const OscillatorSpec &spec, double eps) {
    RMatrix m = h0(spec);
    if (eps != 0.0) {
        for (int k = 0; k < m.rows(); ++k) m(k, k) += eps * (-static_cast<double>(k));
    }
    return m;
}

/// I + |i><j| + |j><i| - |i><i| - |j><j| on all simulated levels.
inline RMatrix swap_target(const GateTask &task) {
    task.validate();
    const int n = task.levels();
    RMatrix u = RMatrix::Identity(n, n);
    const int i = task.swap_from, j = task.swap_to;
    u(i, i) = 0.0;
    u(j, j) = 0.0;
    u(i, j) = 1.0;
    u(j, i) = 1.0;
    return u;
}

/// E_i - E_j from the H0 diagonal.
inline double transition_frequency(int i, int j, const OscillatorSpec &spec) {
    const int n = spec.levels();
    if (i < 0 || j < 0 || i >= n || j >= n) throw DomainError("transition_frequency: level index out of range");
    return h0_energy(spec.self_kerr, i) - h0_energy(spec.self_kerr, j);
}

}  // namespace qudit
