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

// Gate synthesis: trace fidelity on the essential block, a time-averaged
// guard-level population penalty, their exact discrete gradient by a backward
// adjoint sweep, and the bound-constrained optimizer driving them.

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "qudit/core.hpp"
#include "qudit/operators.hpp"
#include "qudit/optimizer.hpp"
#include "qudit/propagator.hpp"
#include "qudit/pulses.hpp"

namespace qudit {

/// |Tr_ess(target^dag u) / d|^2, the trace running over the first d levels.
template <typename U, typename T>
double trace_fidelity(const Eigen::MatrixBase<U> &u, const Eigen::MatrixBase<T> &target, int d) {
    if (u.rows() != u.cols() || target.rows() != target.cols() || u.rows() != target.rows()) {
        throw DimensionError("trace_fidelity: matrices must be square and of equal size");
    }
    if (d < 1 || d > u.rows()) throw DimensionError("trace_fidelity: essential dimension exceeds matrix size");
    Complex tr(0.0, 0.0);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < u.rows(); ++j) tr += std::conj(Complex(target(j, i))) * Complex(u(j, i));
    }
    return std::norm(tr / static_cast<double>(d));
}

/// Population of guard levels (index >= d) summed over the essential columns
/// at one instant, divided by d.
inline double guard_population(const CMatrix &u, int d) {
    double s = 0.0;
    for (int c = 0; c < d; ++c) {
        for (int g = d; g < u.rows(); ++g) s += std::norm(u(g, c));
    }
    return s / d;
}

/// Time average of guard_population over the recorded checkpoints
/// (trapezoidal rule).
inline double guard_penalty(const PropagatorResult &result, int d) {
    const auto &cp = result.checkpoints;
    if (cp.size() < 2) throw DomainError("guard_penalty: need at least two checkpoints");
    if (d < 1 || d > cp.front().u.rows()) throw DimensionError("guard_penalty: bad essential dimension");
    double acc = 0.0;
    double prev = guard_population(cp.front().u, d);
    for (std::size_t k = 1; k < cp.size(); ++k) {
        const double cur = guard_population(cp[k].u, d);
        acc += 0.5 * (cp[k].t - cp[k - 1].t) * (prev + cur);
        prev = cur;
    }
    const double span = cp.back().t - cp.front().t;
    return acc / span;
}

struct ObjectiveReport {
    double infidelity = 1.0;
    double guard_penalty = 0.0;
    double total = 1.0;
    int iteration = 0;
};

struct OptimizerSettings {
    int max_iterations = 200;
    double guard_weight = 1.0;
    std::uint64_t seed = 1234;
    /// Projected-gradient infinity norm (in units of the amplitude bound)
    /// below which synthesis stops early.
    double convergence_tol = 1e-9;
    int memory = 10;
};

/// Everything that fixes the synthesis objective for one gate.
struct ControlProblem {
    GateTask task;
    BSplineBasis basis;
    std::vector<double> carriers;
    double max_amplitude = 0.0;
    PropagationSettings propagation;
    double guard_weight = 1.0;

    int coeff_count() const { return PulseSet::coeff_count(basis, carriers.size()); }

    PulseSet pulse(const Eigen::VectorXd &coeffs) const {
        PulseSet p;
        p.basis = basis;
        p.carriers = carriers;
        p.coeffs = coeffs;
        p.max_amplitude = max_amplitude;
        p.validate();
        return p;
    }

    /// Problem with default carriers on a segments-wide basis spanning the gate.
    static ControlProblem for_task(const GateTask &task, int segments, double max_amplitude,
                                   PropagationSettings propagation = {}, double guard_weight = 1.0) {
        task.validate();
        ControlProblem cp;
        cp.task = task;
        cp.basis = BSplineBasis(segments, task.duration);
        cp.carriers = default_carriers(task);
        cp.max_amplitude = max_amplitude;
        cp.propagation = propagation;
        cp.guard_weight = guard_weight;
        return cp;
    }
};

namespace detail {

/// Forward sweep (report) and optional backward adjoint sweep (gradient) of
/// total = infidelity + w * penalty on the propagation step grid. The penalty
/// samples U at every step node.
inline ObjectiveReport evaluate_objective(const ControlProblem &problem, const Eigen::VectorXd &coeffs,
                                          Eigen::VectorXd *grad) {
    const PulseSet pulse = problem.pulse(coeffs);
    const GateTask &task = problem.task;
    const int n = task.levels();
    const int d = task.essential_dim();
    const RMatrix target = swap_target(task);
    const CMatrix h_static = h0(task.oscillator).cast<Complex>();
    const int steps = step_count(pulse, problem.propagation);
    const TimeGrid grid{0.0, pulse.duration(), steps};
    const double dt = grid.dt();
    const double tau = pulse.duration();
    const double w = problem.guard_weight;

    auto node_weight = [&](int k) { return (k == 0 || k == steps) ? 0.5 * dt : dt; };

    StepExponential stepper(h_static);
    CMatrix u = CMatrix::Identity(n, n);
    double pen = node_weight(0) * guard_population(u, d);
    for (int m = 0; m < steps; ++m) {
        stepper.factor(envelope(pulse, grid.midpoint(m)), dt);
        u = stepper.step() * u;
        pen += node_weight(m + 1) * guard_population(u, d);
    }
    const double defect = unitarity_defect(u);
    if (!(defect <= problem.propagation.unitarity_tol)) {
        throw PropagationError("objective: unitarity defect " + std::to_string(defect) + " exceeds tolerance", defect);
    }
    pen /= tau;

    Complex g(0.0, 0.0);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < n; ++j) g += target(j, i) * u(j, i);
    }
    ObjectiveReport rep;
    rep.infidelity = 1.0 - std::norm(g) / (static_cast<double>(d) * d);
    rep.guard_penalty = pen;
    rep.total = rep.infidelity + w * pen;
    if (!grad) return rep;

    // Adjoint sweep. d(total) = Re sum_k Tr(X_k dU_k); Lambda_k accumulates
    // sum_{j >= k} X_j S_{j-1} ... S_k.
    const double pen_scale = 2.0 * w / (static_cast<double>(d) * tau);
    auto add_penalty_term = [&](CMatrix &lam, const CMatrix &uk, int k) {
        if (w == 0.0) return;
        const double c = pen_scale * node_weight(k);
        for (int i = 0; i < d; ++i) {
            for (int j = d; j < n; ++j) lam(i, j) += c * std::conj(uk(j, i));
        }
    };
    CMatrix lam = CMatrix::Zero(n, n);
    const Complex gscale = -2.0 / (static_cast<double>(d) * d) * std::conj(g);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < n; ++j) lam(i, j) += gscale * target(j, i);
    }
    add_penalty_term(lam, u, steps);

    grad->setZero(coeffs.size());
    const int nb = pulse.basis.size();
    for (int m = steps - 1; m >= 0; --m) {
        const double tm = grid.midpoint(m);
        const auto act = pulse.basis.active(tm);
        stepper.factor(envelope(pulse, act, tm), dt);
        const CMatrix &s = stepper.step();
        const CMatrix u_prev = s.adjoint() * u;
        const auto [gp, gq] = stepper.directional(u_prev * lam);
        for (std::size_t f = 0; f < pulse.carriers.size(); ++f) {
            const double wt = pulse.carriers[f] * tm;
            const double cw = std::cos(wt), sw = std::sin(wt);
            const double da = gp * cw - gq * sw;
            const double db = gp * sw + gq * cw;
            const int base_a = static_cast<int>(2 * f) * nb + act.first;
            for (int r = 0; r <= BSplineBasis::kDegree; ++r) {
                (*grad)(base_a + r) += act.values[r] * da;
                (*grad)(base_a + nb + r) += act.values[r] * db;
            }
        }
        lam = (lam * s).eval();
        add_penalty_term(lam, u_prev, m);
        u = u_prev;
    }
    return rep;
}

}  // namespace detail

inline ObjectiveReport objective(const ControlProblem &problem, const Eigen::VectorXd &coeffs) {
    return detail::evaluate_objective(problem, coeffs, nullptr);
}

/// d(total)/d(coeffs).
inline Eigen::VectorXd gradient(const ControlProblem &problem, const Eigen::VectorXd &coeffs) {
    Eigen::VectorXd g;
    detail::evaluate_objective(problem, coeffs, &g);
    return g;
}

inline std::pair<ObjectiveReport, Eigen::VectorXd> objective_and_gradient(const ControlProblem &problem,
                                                                         const Eigen::VectorXd &coeffs) {
    Eigen::VectorXd g;
    ObjectiveReport r = detail::evaluate_objective(problem, coeffs, &g);
    return {r, g};
}

/// Uniform draw from [-0.01, 0.01] * max_amplitude.
inline Eigen::VectorXd initial_coefficients(const ControlProblem &problem, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-0.01, 0.01);
    Eigen::VectorXd c(problem.coeff_count());
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = dist(rng) * problem.max_amplitude;
    return c;
}

struct TraceRow {
    ObjectiveReport report;
    double gradient_norm = 0.0;
};

struct SynthesisResult {
    PulseSet pulse;
    ObjectiveReport final_report;
    std::vector<TraceRow> history;
    bool converged = false;
};

/// Optimize pulse coefficients for problem.task. Works in coefficients scaled
/// by the amplitude bound so the box is [-1, 1]^n.
inline SynthesisResult synthesize(const ControlProblem &problem, const OptimizerSettings &settings) {
    problem.task.validate();
    if (settings.max_iterations < 0) throw DomainError("synthesize: max_iterations must be >= 0");
    if (!(problem.max_amplitude > 0.0)) throw DomainError("synthesize: max_amplitude must be > 0");
    ControlProblem prob = problem;
    prob.guard_weight = settings.guard_weight;
    const double scale = prob.max_amplitude;
    const Eigen::VectorXd c0 = initial_coefficients(prob, settings.seed);

    SynthesisResult out;
    if (settings.max_iterations == 0) {
        out.pulse = prob.pulse(c0);
        const auto [rep, g] = objective_and_gradient(prob, c0);
        out.final_report = rep;
        out.history.push_back({rep, g.norm()});
        return out;
    }

    ObjectiveReport last;
    auto fg = [&](const Eigen::VectorXd &z, Eigen::VectorXd &gz) {
        auto [rep, g] = objective_and_gradient(prob, z * scale);
        gz = g * scale;
        last = rep;
        return rep.total;
    };
    // The optimizer reports each accepted point right after evaluating it, so
    // `last` holds that point's report.
    auto on_iter = [&](int iter, const Eigen::VectorXd &, double, const Eigen::VectorXd &gz) {
        ObjectiveReport r = last;
        r.iteration = iter;
        out.history.push_back({r, gz.norm() / scale});
    };

    BoxLbfgsSettings bs;
    bs.max_iterations = settings.max_iterations;
    bs.memory = settings.memory;
    bs.gradient_tol = settings.convergence_tol;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(c0.size());
    const BoxLbfgsResult res = minimize_box(fg, c0 / scale, -ones, ones, bs, on_iter);

    out.pulse = prob.pulse(res.x * scale);
    out.pulse.clamp();
    out.final_report = out.history.back().report;
    out.converged = res.converged;
    return out;
}

}  // namespace qudit
