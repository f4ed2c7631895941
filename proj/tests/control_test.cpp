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

#include "qudit/control.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace qudit;
using qudit::testing::coarse;
using qudit::testing::lab_oscillator;
using qudit::testing::short_task;

namespace {

ControlProblem small_problem(int to = 2, double duration = 30.0, double w = 1.0) {
    return ControlProblem::for_task(short_task(to, duration), 6, ghz_to_rad_per_ns(0.03), coarse(), w);
}

Eigen::VectorXd random_coeffs(const ControlProblem &p, std::uint64_t seed, double fill) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd c(p.coeff_count());
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = fill * p.max_amplitude * u(rng);
    return c;
}

}  // namespace

TEST(TraceFidelity, examples) {
    const GateTask task{0, 3, 140.0, lab_oscillator(4)};
    const RMatrix t = swap_target(task);
    EXPECT_DOUBLE_EQ(trace_fidelity(t, t, 4), 1.0);
    const RMatrix id = RMatrix::Identity(5, 5);
    // Tr_ess(SWAP^dag I) = 2 for a 4-level swap of two levels.
    EXPECT_DOUBLE_EQ(trace_fidelity(id, t, 4), 0.25);
    EXPECT_THROW(trace_fidelity(id, t, 6), DimensionError);
    EXPECT_THROW(trace_fidelity(RMatrix(RMatrix::Identity(4, 4)), t, 4), DimensionError);
}

TEST(TraceFidelity, global_phase_invariance) {
    const GateTask task = short_task(3, 30.0);
    const PulseSet p = qudit::testing::random_pulse(task, 5, 6, 3.0);
    const CMatrix u = propagate(h0(task.oscillator), p, coarse()).final_unitary;
    const RMatrix t = swap_target(task);
    const double f = trace_fidelity(u, t, 4);
    for (double phi : {0.3, 1.7, -2.9}) {
        EXPECT_NEAR(trace_fidelity(CMatrix(std::polar(1.0, phi) * u), t, 4), f, 1e-14);
    }
}

TEST(GuardPenalty, confined_evolution_is_zero) {
    const GateTask task = short_task(2, 20.0);
    const PulseSet p = zero_pulse(BSplineBasis(4, task.duration), default_carriers(task), 1.0);
    const auto r = propagate(h0(task.oscillator), p, {40.0, 1e-10, 100});
    EXPECT_EQ(guard_penalty(r, 3), 0.0);
}

TEST(GuardPenalty, full_guard_column) {
    PropagatorResult r;
    CMatrix x = CMatrix::Zero(2, 2);
    x(0, 1) = x(1, 0) = 1.0;
    r.checkpoints = {{0.0, x}, {1.0, x}, {3.0, x}};
    EXPECT_DOUBLE_EQ(guard_penalty(r, 1), 1.0);
    r.checkpoints.resize(1);
    EXPECT_THROW(guard_penalty(r, 1), DomainError);
}

TEST(GuardPenalty, time_average_of_leaked_population) {
    const double w = 0.37, tau = 11.0;
    const int m = 20000;
    PropagatorResult r;
    for (int k = 0; k <= m; ++k) {
        const double t = tau * k / m;
        CMatrix u(2, 2);
        u << std::cos(w * t), -std::sin(w * t), std::sin(w * t), std::cos(w * t);
        r.checkpoints.push_back({t, u});
    }
    const double want = 0.5 - std::sin(2 * w * tau) / (4 * w * tau);
    EXPECT_NEAR(guard_penalty(r, 1), want, 1e-8);
}

TEST(Objective, zero_drive_closed_form) {
    const GateTask task{0, 3, 140.0, lab_oscillator(4)};
    const ControlProblem p = ControlProblem::for_task(task, 10, ghz_to_rad_per_ns(0.03), coarse(10.0));
    const auto rep = objective(p, Eigen::VectorXd::Zero(p.coeff_count()));
    const double xi = task.oscillator.self_kerr;
    const double want = 1.0 - std::norm(1.0 + std::polar(1.0, xi * task.duration)) / 16.0;
    EXPECT_NEAR(rep.infidelity, want, 1e-12);
    EXPECT_EQ(rep.guard_penalty, 0.0);
    // No first-order path connects the swapped levels or reaches the guard.
    EXPECT_LT(gradient(p, Eigen::VectorXd::Zero(p.coeff_count())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Objective, total_is_weighted_sum) {
    for (double w : {0.0, 1.0, 10.0}) {
        const ControlProblem p = small_problem(2, 30.0, w);
        const auto rep = objective(p, random_coeffs(p, 9, 3.0));
        EXPECT_GT(rep.guard_penalty, 0.0);
        EXPECT_DOUBLE_EQ(rep.total, rep.infidelity + w * rep.guard_penalty);
    }
}

TEST(Objective, penalty_matches_checkpointed_propagation) {
    const ControlProblem p = small_problem();
    const Eigen::VectorXd c = random_coeffs(p, 10, 3.0);
    const auto rep = objective(p, c);
    PropagationSettings s = p.propagation;
    s.checkpoint_intervals = step_count(p.pulse(c), p.propagation);
    const auto r = propagate(h0(p.task.oscillator), p.pulse(c), s);
    EXPECT_NEAR(rep.guard_penalty, guard_penalty(r, p.task.essential_dim()), 1e-14);
    EXPECT_NEAR(rep.infidelity, 1.0 - trace_fidelity(r.final_unitary, swap_target(p.task), 3), 1e-14);
}

TEST(Gradient, matches_central_differences) {
    for (double w : {0.0, 1.0}) {
        const ControlProblem p = small_problem(3, 30.0, w);
        const Eigen::VectorXd c = random_coeffs(p, 11, 2.0);
        const Eigen::VectorXd g = gradient(p, c);
        std::mt19937_64 rng(12);
        std::uniform_int_distribution<int> pick(0, p.coeff_count() - 1);
        const double h = 1e-6 * p.max_amplitude;
        for (int k = 0; k < 20; ++k) {
            const int i = pick(rng);
            Eigen::VectorXd cp = c, cm = c;
            cp(i) += h;
            cm(i) -= h;
            const double fd = (objective(p, cp).total - objective(p, cm).total) / (2 * h);
            EXPECT_NEAR(g(i), fd, std::max(1e-8, 1e-5 * std::abs(fd))) << "coordinate " << i;
        }
    }
}

TEST(Synthesize, zero_iterations_returns_initial_point) {
    const ControlProblem p = small_problem();
    OptimizerSettings s;
    s.max_iterations = 0;
    const auto r = synthesize(p, s);
    EXPECT_EQ(r.pulse.coeffs, initial_coefficients(p, s.seed));
    ASSERT_EQ(r.history.size(), 1u);
    EXPECT_EQ(r.final_report.total, objective(p, r.pulse.coeffs).total);
    EXPECT_LE(r.pulse.coeffs.cwiseAbs().maxCoeff(), 0.01 * p.max_amplitude);
}

TEST(Synthesize, converges_on_a_short_swap) {
    const ControlProblem p = small_problem(1, 30.0);
    OptimizerSettings s;
    s.max_iterations = 40;
    const auto r = synthesize(p, s);
    EXPECT_LT(r.final_report.infidelity, 1e-4);
    EXPECT_LE(r.pulse.coeffs.cwiseAbs().maxCoeff(), p.max_amplitude);
    for (std::size_t k = 1; k < r.history.size(); ++k) {
        EXPECT_LE(r.history[k].report.total, r.history[k - 1].report.total);
        EXPECT_EQ(r.history[k].report.iteration, static_cast<int>(k));
    }
    EXPECT_EQ(r.final_report.total, objective(p, r.pulse.coeffs).total);
}

TEST(Synthesize, deterministic_for_a_seed) {
    const ControlProblem p = small_problem(2, 30.0);
    OptimizerSettings s;
    s.max_iterations = 5;
    const auto a = synthesize(p, s);
    const auto b = synthesize(p, s);
    EXPECT_EQ(a.pulse.coeffs, b.pulse.coeffs);
    s.seed = 99;
    EXPECT_NE(synthesize(p, s).pulse.coeffs, a.pulse.coeffs);
}

TEST(Synthesize, rejects_bad_settings) {
    ControlProblem p = small_problem();
    OptimizerSettings s;
    s.max_iterations = -1;
    EXPECT_THROW(synthesize(p, s), DomainError);
    p.task.swap_to = 7;
    EXPECT_THROW(synthesize(p, {}), Error);
}
