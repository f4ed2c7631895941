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

#include "qudit/pulses.hpp"

#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

using namespace qudit;

TEST(BSplineBasis, partition_of_unity) {
    const BSplineBasis b(10, 140.0);
    EXPECT_EQ(b.size(), 12);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> t(0.0, 140.0);
    for (int i = 0; i < 1000; ++i) {
        const Eigen::VectorXd v = basis_eval(b, t(rng));
        EXPECT_NEAR(v.sum(), 1.0, 1e-12);
        EXPECT_GE(v.minCoeff(), 0.0);
    }
    for (double edge : {0.0, 140.0, 14.0, 70.0}) EXPECT_NEAR(basis_eval(b, edge).sum(), 1.0, 1e-12);
}

TEST(BSplineBasis, local_support_at_start) {
    const BSplineBasis b(10, 140.0);
    const Eigen::VectorXd v = basis_eval(b, 0.0);
    EXPECT_EQ(v(0), 1.0);
    EXPECT_EQ(v.tail(b.size() - 3).cwiseAbs().maxCoeff(), 0.0);
    const Eigen::VectorXd w = basis_eval(b, 5.0);
    EXPECT_EQ(w.tail(b.size() - 3).cwiseAbs().maxCoeff(), 0.0);
}

TEST(BSplineBasis, symmetric_peak) {
    // Knots 0,0,0,1,2,2,2 scaled to tau = 2: at t = 1 the two inner
    // quadratics each take 1/2.
    const BSplineBasis b(2, 2.0);
    const Eigen::VectorXd v = basis_eval(b, 1.0);
    EXPECT_DOUBLE_EQ(v(1), 0.5);
    EXPECT_DOUBLE_EQ(v(2), 0.5);
    EXPECT_EQ(v(0), 0.0);
    EXPECT_EQ(v(3), 0.0);
}

TEST(BSplineBasis, domain_errors) {
    const BSplineBasis b(4, 10.0);
    EXPECT_THROW(basis_eval(b, -1e-9), DomainError);
    EXPECT_THROW(basis_eval(b, 10.0 + 1e-9), DomainError);
    EXPECT_THROW(BSplineBasis(0, 1.0), DomainError);
    EXPECT_THROW(BSplineBasis(3, 0.0), DomainError);
}

TEST(Envelope, zero_pulse) {
    const PulseSet p = zero_pulse(BSplineBasis(5, 20.0), {0.0, -1.3}, 0.2);
    for (double t : {0.0, 3.3, 20.0}) {
        const auto a = envelope(p, t);
        EXPECT_EQ(a.p, 0.0);
        EXPECT_EQ(a.q, 0.0);
    }
}

TEST(Envelope, carrier_free_limit) {
    PulseSet p = zero_pulse(BSplineBasis(5, 20.0), {0.0}, 1.0);
    for (int b = 0; b < p.basis.size(); ++b) p.coeffs(p.index(0, 0, b)) = 0.1 * (b + 1);
    for (double t : {0.0, 1.7, 9.0, 20.0}) {
        const auto a = envelope(p, t);
        EXPECT_NEAR(a.p, basis_eval(p.basis, t).dot(p.coeffs.head(p.basis.size())), 1e-15);
        EXPECT_EQ(a.q, 0.0);
    }
}

TEST(Envelope, constant_in_phase_on_carrier) {
    const double w = -1.38;
    PulseSet p = zero_pulse(BSplineBasis(7, 30.0), {w}, 1.0);
    p.coeffs.head(p.basis.size()).setOnes();
    for (double t : {0.0, 2.5, 11.0, 30.0}) {
        const auto a = envelope(p, t);
        EXPECT_NEAR(a.p, std::cos(w * t), 1e-14);
        EXPECT_NEAR(a.q, -std::sin(w * t), 1e-14);
    }
}

TEST(Envelope, first_derivative_is_continuous) {
    const GateTask task = qudit::testing::short_task(3, 40.0);
    const PulseSet p = qudit::testing::random_pulse(task, 5, 8);
    // Across every interior knot, one-sided difference quotients agree to
    // O(h) (a jump in the derivative would leave an O(1) gap).
    const double h = 1e-5;
    for (int s = 1; s < p.basis.segments(); ++s) {
        const double t = p.duration() * s / p.basis.segments();
        const auto l0 = envelope(p, t - 2 * h), l1 = envelope(p, t - h), c = envelope(p, t);
        const auto r1 = envelope(p, t + h), r0 = envelope(p, t + 2 * h);
        EXPECT_NEAR(r1.p - c.p, c.p - l1.p, 1e-8);
        EXPECT_NEAR(r1.q - c.q, c.q - l1.q, 1e-8);
        EXPECT_NEAR(r0.p - l0.p, 2.0 * (r1.p - l1.p), 1e-8);
    }
}

TEST(Envelope, amplitude_bound_from_clamped_coefficients) {
    const GateTask task = qudit::testing::short_task(4, 50.0);
    PulseSet p = qudit::testing::random_pulse(task, 9, 6, 3.0);
    p.clamp();
    EXPECT_LE(p.coeffs.cwiseAbs().maxCoeff(), p.max_amplitude);
    // Each carrier contributes at most |A + iB| <= sqrt(2) c.
    const double bound = std::sqrt(2.0) * p.carriers.size() * p.max_amplitude;
    for (int i = 0; i <= 500; ++i) {
        const auto a = envelope(p, p.duration() * i / 500.0);
        EXPECT_LE(std::abs(a.p), bound);
        EXPECT_LE(std::abs(a.q), bound);
    }
}

TEST(DriveHamiltonian, basic_values) {
    const PulseSet zero = zero_pulse(BSplineBasis(3, 10.0), {0.0}, 1.0);
    EXPECT_EQ(drive_hamiltonian(zero, 4.0, 5).cwiseAbs().maxCoeff(), 0.0);
    CMatrix x(2, 2);
    x << 0, 1, 1, 0;
    EXPECT_EQ(drive_operator({1.0, 0.0}, 2), x);
}

TEST(DriveHamiltonian, hermitian_for_random_pulses) {
    const GateTask task = qudit::testing::short_task(4, 25.0);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> t(0.0, 25.0);
    for (int trial = 0; trial < 100; ++trial) {
        const PulseSet p = qudit::testing::random_pulse(task, 100 + trial, 5, 4.0);
        const CMatrix h = drive_hamiltonian(p, t(rng), 6);
        EXPECT_EQ((h - h.adjoint()).cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(DefaultCarriers, adjacent_gaps) {
    OscillatorSpec unit2{2, 1, 1.0, 0.0};
    EXPECT_EQ(default_carriers(GateTask{0, 1, 10.0, unit2}), std::vector<double>({0.0}));
    OscillatorSpec unit4{4, 1, 1.0, 0.0};
    EXPECT_EQ(default_carriers(GateTask{0, 3, 10.0, unit4}), std::vector<double>({0.0, -1.0, -2.0}));
    const double xi = ghz_to_rad_per_ns(0.22);
    OscillatorSpec osc{5, 1, xi, 0.0};
    const auto c = default_carriers(GateTask{0, 4, 215.0, osc});
    ASSERT_EQ(c.size(), 4u);
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(c[k], -k * xi, 1e-14);
}

TEST(Refinement, knot_insertion_preserves_envelope) {
    const GateTask task = qudit::testing::short_task(3, 60.0);
    const PulseSet p = qudit::testing::random_pulse(task, 77, 10);
    const PulseSet r = refine(p);
    EXPECT_EQ(r.basis.segments(), 20);
    EXPECT_EQ(r.coeffs.size(), PulseSet::coeff_count(r.basis, r.carriers.size()));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> t(0.0, 60.0);
    for (int i = 0; i < 500; ++i) {
        const double tt = i == 0 ? 0.0 : (i == 1 ? 60.0 : t(rng));
        const auto a = envelope(p, tt), b = envelope(r, tt);
        EXPECT_NEAR(a.p, b.p, 1e-10);
        EXPECT_NEAR(a.q, b.q, 1e-10);
    }
}
