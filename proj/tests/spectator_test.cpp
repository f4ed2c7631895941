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

#include "qudit/spectator.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace qudit;
using qudit::testing::coarse;
using qudit::testing::lab_oscillator;
using qudit::testing::random_pulse;
using qudit::testing::short_task;

namespace {

/// Three essential levels and no guard, so the essential block is closed.
GateTask closed_task() {
    OscillatorSpec s = lab_oscillator(3);
    s.guard_levels = 0;
    return {0, 2, 30.0, s};
}

bool is_hermitian(const CMatrix &m, double tol) { return max_abs_diff(m, m.adjoint()) <= tol; }

}  // namespace

TEST(RotatingFrame, examples) {
    const GateTask task = short_task(2, 20.0);
    const CMatrix u = propagate(h0(task.oscillator), random_pulse(task, 1), coarse()).final_unitary;
    EXPECT_LT(max_abs_diff(rotating_frame_propagator(u, u), CMatrix::Identity(4, 4)), 1e-12);
    const CMatrix phased = std::polar(1.0, 0.4) * u;
    EXPECT_LT(max_abs_diff(rotating_frame_propagator(u, phased), std::polar(1.0, 0.4) * CMatrix::Identity(4, 4)),
              1e-12);
    EXPECT_THROW(rotating_frame_propagator(u, CMatrix::Identity(3, 3)), DimensionError);
}

TEST(ShiftedFidelity, unperturbed_is_one) {
    const GateTask task = short_task(3, 30.0);
    const ShiftedFidelity sim(random_pulse(task, 2, 6, 3.0), task, coarse());
    EXPECT_NEAR(sim.fidelity(0.0), 1.0, 1e-12);
    EXPECT_NEAR(shifted_gate_fidelity(sim.pulse(), task, 0.0, coarse()), 1.0, 1e-12);
}

TEST(ShiftedFidelity, exchanged_occupations_are_bit_identical) {
    const GateTask task = short_task(3, 30.0);
    const ShiftedFidelity sim(random_pulse(task, 3, 6, 3.0), task, coarse());
    const double xi = 1e-3 * task.oscillator.self_kerr;
    const SpectatorConfig a({{xi, 7}, {xi, 19}, {0.1 * xi, 4}});
    const SpectatorConfig b({{0.1 * xi, 4}, {xi, 19}, {xi, 7}});
    const SpectatorConfig c({{xi, 19}, {0.1 * xi, 4}, {xi, 7}});
    EXPECT_EQ(sim.fidelity(a.epsilon_shift()), sim.fidelity(b.epsilon_shift()));
    EXPECT_EQ(sim.fidelity(a.epsilon_shift()), sim.fidelity(c.epsilon_shift()));
}

TEST(ShiftedFidelity, zero_pulse_closed_form) {
    // U0^dag U_eff = diag(e^{i eps k tau}) on the essential block.
    const GateTask task = short_task(3, 30.0);
    const PulseSet p = zero_pulse(BSplineBasis(4, task.duration), default_carriers(task), 1.0);
    const ShiftedFidelity sim(p, task, coarse());
    const double eps = 0.01;
    Complex tr(0.0, 0.0);
    for (int k = 0; k < 4; ++k) tr += std::polar(1.0, eps * k * task.duration);
    EXPECT_NEAR(sim.fidelity(eps), std::norm(tr / 4.0), 1e-11);
}

TEST(VTilde, initial_value_trace_and_zero_drive) {
    const GateTask task = short_task(3, 30.0);
    const int n = task.levels();
    const RMatrix v = shift_operator(n);
    const auto r = propagate(h0(task.oscillator), random_pulse(task, 4, 6, 3.0), {40.0, 1e-10, 60});
    const auto vt = v_tilde(r.checkpoints, n);
    ASSERT_EQ(vt.size(), 61u);
    EXPECT_EQ(max_abs_diff(vt.front().m, v), 0.0);
    for (const auto &x : vt) {
        EXPECT_NEAR(x.m.trace().real(), v.trace(), 1e-10);
        EXPECT_TRUE(is_hermitian(x.m, 1e-12));
    }
    const PulseSet z = zero_pulse(BSplineBasis(4, task.duration), default_carriers(task), 1.0);
    const auto rz = propagate(h0(task.oscillator), z, {40.0, 1e-10, 30});
    for (const auto &x : v_tilde(rz.checkpoints, n)) EXPECT_LT(max_abs_diff(x.m, v), 1e-12);
}

TEST(VBar, constant_series_and_trace) {
    const double tau = 12.0;
    const CMatrix a = shift_operator(5).cast<Complex>();
    std::vector<TimedMatrix> s = {{0.0, a}, {3.0, a}, {3.0, a}, {12.0, a}};
    EXPECT_LT(max_abs_diff(v_bar(s, tau), a), 1e-15);
    EXPECT_THROW(v_bar({{0.0, a}}, tau), DomainError);

    const GateTask task = short_task(3, 30.0);
    const auto m = perturbative_model(random_pulse(task, 5, 6, 3.0), task, coarse(), 300);
    const int n = task.levels();
    EXPECT_NEAR(m.v_bar.trace().real(), -0.5 * n * (n - 1), 1e-12);
    EXPECT_TRUE(is_hermitian(m.v_bar, 1e-13));
}

TEST(VBar, checkpoint_refinement) {
    const GateTask task = short_task(3, 30.0);
    const PulseSet p = random_pulse(task, 6, 6, 3.0);
    const auto m1 = perturbative_model(p, task, {}, 2000);
    const auto m2 = perturbative_model(p, task, {}, 4000);
    EXPECT_LT(max_abs_diff(m1.v_bar, m2.v_bar), 1e-6);
    EXPECT_LT(max_abs_diff(m1.gamma, m2.gamma), 1e-4 * m2.gamma.cwiseAbs().maxCoeff());
}

TEST(Gamma, zero_drive_vanishes) {
    const GateTask task = short_task(3, 30.0);
    const PulseSet z = zero_pulse(BSplineBasis(4, task.duration), default_carriers(task), 1.0);
    const auto m = perturbative_model(z, task, coarse(), 100);
    EXPECT_LT(m.gamma.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Gamma, piecewise_constant_closed_form) {
    const double tau = 8.0;
    CMatrix a = CMatrix::Zero(2, 2), b = CMatrix::Zero(2, 2);
    a << 1.0, 0.0, 0.0, -1.0;
    b << 0.0, 1.0, 1.0, 0.0;
    const std::vector<TimedMatrix> s = {{0.0, a}, {tau / 2, a}, {tau / 2, b}, {tau, b}};
    const CMatrix want = Complex(0.0, tau * tau / 4) * (a * b - b * a);
    EXPECT_LT(max_abs_diff(gamma(s, tau), want), 1e-13);
}

TEST(Gamma, hermitian_for_a_driven_pulse) {
    const GateTask task = short_task(3, 30.0);
    const auto m = perturbative_model(random_pulse(task, 7, 6, 3.0), task, coarse(), 500);
    EXPECT_GT(m.gamma.cwiseAbs().maxCoeff(), 1e-3);
    EXPECT_TRUE(is_hermitian(m.gamma, 1e-10 * m.gamma.cwiseAbs().maxCoeff()));
}

TEST(Susceptibility, two_level_example) {
    const double tau = 10.0;
    const CMatrix v = shift_operator(3).cast<Complex>();
    EXPECT_NEAR(susceptibility(v, tau, 2, SusceptibilityForm::kLiteral), 0.0, 1e-15);
    EXPECT_NEAR(susceptibility(v, tau, 2), 0.25 * tau * tau, 1e-12);
    EXPECT_NEAR(perturbative_infidelity(v, tau, 2, 1e-3), 0.25 * tau * tau * 1e-6, 1e-18);
    EXPECT_THROW(susceptibility(v, tau, 0), DomainError);
    EXPECT_THROW(susceptibility(v, tau, 4), DimensionError);
}

TEST(Susceptibility, variance_is_nonnegative) {
    const GateTask task = short_task(3, 30.0);
    for (std::uint64_t seed = 20; seed < 25; ++seed) {
        const auto m = perturbative_model(random_pulse(task, seed, 6, 3.0), task, coarse(), 200);
        EXPECT_GE(m.susceptibility, 0.0);
    }
}

TEST(Predictor, matches_simulation_on_a_closed_block) {
    const GateTask task = closed_task();
    const PulseSet p = random_pulse(task, 8, 6, 3.0);
    const ShiftedFidelity sim(p, task, {});
    const auto model = perturbative_model(p, task, {}, 3000);
    for (double eps : {1e-5, -1e-5, 1e-4}) {
        const double s = sim.infidelity(eps);
        EXPECT_NEAR(model.predicted_infidelity(eps), s, 1e-2 * s) << "eps " << eps;
    }
    const double xi = task.oscillator.self_kerr;
    const auto rep = decay_report(sim, model, 1e-4);
    EXPECT_EQ(rep.eps_over_xi, 1e-4);
    EXPECT_EQ(rep.predicted_infidelity, model.predicted_infidelity(1e-4 * xi));
    EXPECT_EQ(rep.simulated_infidelity, sim.infidelity(1e-4 * xi));
}
