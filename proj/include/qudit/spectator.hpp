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

// Fidelity decay of a fixed pulse when spectator occupations shift the target
// mode by eps: full simulation against the unshifted evolution, and the
// second-order perturbative estimate built from the interaction-picture shift
// operator V~(t) = U0^dag(t) V U0(t).

#include <utility>
#include <vector>

#include "qudit/control.hpp"
#include "qudit/core.hpp"
#include "qudit/operators.hpp"
#include "qudit/propagator.hpp"
#include "qudit/pulses.hpp"

namespace qudit {

/// U0^dag U_eff.
inline CMatrix rotating_frame_propagator(const CMatrix &u0, const CMatrix &u_eff) {
    if (u0.rows() != u_eff.rows() || u0.cols() != u_eff.cols() || u0.rows() != u0.cols()) {
        throw DimensionError("rotating_frame_propagator: dimension mismatch");
    }
    return u0.adjoint() * u_eff;
}

/// Evaluates |Tr_ess(U0^dag(tau) U_eff(tau)) / d|^2 for many shifts of one
/// pulse, propagating the unshifted reference once.
class ShiftedFidelity {
   public:
    ShiftedFidelity(PulseSet pulse, GateTask task, PropagationSettings settings)
        : pulse_(std::move(pulse)), task_(std::move(task)), settings_(settings) {
        task_.validate();
        settings_.checkpoint_intervals = 0;
        u0_ = propagate_shifted(task_.oscillator, 0.0, pulse_, settings_).final_unitary;
    }

    const CMatrix &reference() const { return u0_; }
    const GateTask &task() const { return task_; }
    const PulseSet &pulse() const { return pulse_; }
    const PropagationSettings &settings() const { return settings_; }

    double fidelity(double eps) const {
        const CMatrix u_eff = propagate_shifted(task_.oscillator, eps, pulse_, settings_).final_unitary;
        return trace_fidelity(u_eff, u0_, task_.essential_dim());
    }

    double infidelity(double eps) const { return 1.0 - fidelity(eps); }

    /// 1 - |Tr_ess(target^dag U_eff)/d|^2: the shifted gate scored against the
    /// ideal SWAP instead of the unshifted pulse. Includes the synthesis floor.
    double target_infidelity(double eps) const {
        const CMatrix u_eff = propagate_shifted(task_.oscillator, eps, pulse_, settings_).final_unitary;
        return 1.0 - trace_fidelity(u_eff, swap_target(task_), task_.essential_dim());
    }

   private:
    PulseSet pulse_;
    GateTask task_;
    PropagationSettings settings_;
    CMatrix u0_;
};

inline double shifted_gate_fidelity(const PulseSet &pulse, const GateTask &task, double eps,
                                    const PropagationSettings &settings = {}) {
    return ShiftedFidelity(pulse, task, settings).fidelity(eps);
}

struct TimedMatrix {
    double t = 0.0;
    CMatrix m;
};

/// V~(t) = U0^dag(t) V U0(t) at every checkpoint of an unshifted propagation.
inline std::vector<TimedMatrix> v_tilde(const std::vector<Checkpoint> &u0_checkpoints, int n) {
    if (u0_checkpoints.empty()) throw DomainError("v_tilde: no checkpoints");
    const CMatrix v = shift_operator(n).cast<Complex>();
    std::vector<TimedMatrix> out;
    out.reserve(u0_checkpoints.size());
    for (const auto &cp : u0_checkpoints) {
        if (cp.u.rows() != n) throw DimensionError("v_tilde: checkpoint dimension mismatch");
        out.push_back({cp.t, cp.u.adjoint() * v * cp.u});
    }
    return out;
}

/// (1/tau) * integral of V~ over the series (trapezoidal rule; repeated time
/// nodes are allowed and contribute nothing).
inline CMatrix v_bar(const std::vector<TimedMatrix> &series, double tau) {
    if (series.size() < 2) throw DomainError("v_bar: need at least two checkpoints");
    if (!(tau > 0.0)) throw DomainError("v_bar: tau must be > 0");
    const int n = static_cast<int>(series.front().m.rows());
    CMatrix acc = CMatrix::Zero(n, n);
    for (std::size_t k = 1; k < series.size(); ++k) {
        acc += 0.5 * (series[k].t - series[k - 1].t) * (series[k].m + series[k - 1].m);
    }
    return acc / tau;
}

/// Gamma(tau) = i * int_0^tau dt' int_t'^tau dt'' [V~(t'), V~(t'')], evaluated
/// as i * int dt' [V~(t'), R(t')] with R(t') = int_t'^tau V~, both integrals by
/// the trapezoidal rule on the series nodes.
inline CMatrix gamma(const std::vector<TimedMatrix> &series, double tau) {
    if (series.size() < 2) throw DomainError("gamma: need at least two checkpoints");
    if (!(tau > 0.0)) throw DomainError("gamma: tau must be > 0");
    const std::size_t m = series.size();
    const int n = static_cast<int>(series.front().m.rows());
    std::vector<CMatrix> tail(m, CMatrix::Zero(n, n));
    for (std::size_t k = m - 1; k-- > 0;) {
        tail[k] = tail[k + 1] + 0.5 * (series[k + 1].t - series[k].t) * (series[k + 1].m + series[k].m);
    }
    auto comm = [&](std::size_t k) -> CMatrix { return series[k].m * tail[k] - tail[k] * series[k].m; };
    CMatrix acc = CMatrix::Zero(n, n);
    CMatrix prev = comm(0);
    for (std::size_t k = 1; k < m; ++k) {
        CMatrix cur = comm(k);
        acc += 0.5 * (series[k].t - series[k - 1].t) * (prev + cur);
        prev = std::move(cur);
    }
    return Complex(0.0, 1.0) * acc;
}

/// How the trace term multiplying (eps tau)^2 is normalized.
enum class SusceptibilityForm {
    /// Tr(V^2)/d - Tr(V)^2/d^2: the variance of V-bar in the maximally mixed
    /// essential state, which is what expanding |Tr(exp(-i eps tau V))/d|^2 to
    /// second order gives.
    kVariance,
    /// (Tr(V^2) - Tr(V)^2)/d^2 taken literally.
    kLiteral,
};

/// Coefficient of eps^2 in the infidelity, using the d x d essential block of
/// v_bar.
inline double susceptibility(const CMatrix &vbar, double tau, int d,
                             SusceptibilityForm form = SusceptibilityForm::kVariance) {
    if (d <= 0) throw DomainError("susceptibility: essential dimension must be positive");
    if (d > vbar.rows()) throw DimensionError("susceptibility: essential dimension exceeds V-bar size");
    const CMatrix block = vbar.topLeftCorner(d, d);
    const double tr = block.trace().real();
    const double tr2 = (block * block).trace().real();
    const double dd = static_cast<double>(d);
    const double coeff = form == SusceptibilityForm::kVariance ? tr2 / dd - tr * tr / (dd * dd)
                                                               : (tr2 - tr * tr) / (dd * dd);
    return coeff * tau * tau;
}

inline double perturbative_infidelity(const CMatrix &vbar, double tau, int d, double eps,
                                      SusceptibilityForm form = SusceptibilityForm::kVariance) {
    return susceptibility(vbar, tau, d, form) * eps * eps;
}

/// Time-averaged shift operator and correlation integral of one pulse.
struct PerturbativeModel {
    CMatrix v_bar;
    CMatrix gamma;
    double tau = 0.0;
    int essential_dim = 0;
    double susceptibility = 0.0;

    double predicted_infidelity(double eps) const { return susceptibility * eps * eps; }
};

inline constexpr int kDefaultCheckpoints = 2000;

inline PerturbativeModel perturbative_model(const PulseSet &pulse, const GateTask &task,
                                            PropagationSettings settings = {},
                                            int checkpoints = kDefaultCheckpoints,
                                            SusceptibilityForm form = SusceptibilityForm::kVariance) {
    task.validate();
    if (checkpoints < 1) throw DomainError("perturbative_model: need at least one checkpoint interval");
    settings.checkpoint_intervals = checkpoints;
    const PropagatorResult r = propagate_shifted(task.oscillator, 0.0, pulse, settings);
    const auto series = v_tilde(r.checkpoints, task.levels());
    PerturbativeModel out;
    out.tau = pulse.duration();
    out.essential_dim = task.essential_dim();
    out.v_bar = v_bar(series, out.tau);
    out.gamma = gamma(series, out.tau);
    out.susceptibility = susceptibility(out.v_bar, out.tau, out.essential_dim, form);
    return out;
}

struct DecayReport {
    double eps_over_xi = 0.0;
    double simulated_infidelity = 0.0;
    double predicted_infidelity = 0.0;
    double susceptibility = 0.0;
};

inline DecayReport decay_report(const ShiftedFidelity &sim, const PerturbativeModel &model, double eps_over_xi) {
    const double eps = eps_over_xi * sim.task().oscillator.self_kerr;
    DecayReport r;
    r.eps_over_xi = eps_over_xi;
    r.simulated_infidelity = std::clamp(sim.infidelity(eps), 0.0, 1.0);
    r.susceptibility = model.susceptibility;
    r.predicted_infidelity = model.predicted_infidelity(eps);
    return r;
}

}  // namespace qudit
