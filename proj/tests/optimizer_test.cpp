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

#include "qudit/optimizer.hpp"

#include <gtest/gtest.h>

#include <limits>

using namespace qudit;

namespace {

auto no_trace = [](int, const Eigen::VectorXd &, double, const Eigen::VectorXd &) {};

}  // namespace

TEST(MinimizeBox, active_bounds_on_a_quadratic) {
    // f = sum_i w_i (x_i - c_i)^2 with minimizer outside the box on two axes.
    const Eigen::VectorXd c = (Eigen::VectorXd(4) << 0.3, -2.0, 1.7, -0.4).finished();
    const Eigen::VectorXd w = (Eigen::VectorXd(4) << 1.0, 3.0, 0.5, 10.0).finished();
    auto fg = [&](const Eigen::VectorXd &x, Eigen::VectorXd &g) {
        const Eigen::VectorXd r = x - c;
        g = 2.0 * w.cwiseProduct(r);
        return w.dot(r.cwiseProduct(r));
    };
    const Eigen::VectorXd lo = -Eigen::VectorXd::Ones(4), hi = Eigen::VectorXd::Ones(4);
    const auto res = minimize_box(fg, Eigen::VectorXd::Zero(4), lo, hi, {}, no_trace);
    EXPECT_TRUE(res.converged);
    EXPECT_NEAR(res.x(0), 0.3, 1e-7);
    EXPECT_EQ(res.x(1), -1.0);
    EXPECT_EQ(res.x(2), 1.0);
    EXPECT_NEAR(res.x(3), -0.4, 1e-7);
}

TEST(MinimizeBox, rosenbrock_interior_minimum) {
    auto fg = [](const Eigen::VectorXd &x, Eigen::VectorXd &g) {
        const double a = 1.0 - x(0), b = x(1) - x(0) * x(0);
        g.resize(2);
        g(0) = -2.0 * a - 400.0 * x(0) * b;
        g(1) = 200.0 * b;
        return a * a + 100.0 * b * b;
    };
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -2.0), hi = Eigen::VectorXd::Constant(2, 2.0);
    BoxLbfgsSettings s;
    s.max_iterations = 500;
    const auto res = minimize_box(fg, Eigen::VectorXd::Constant(2, -1.2), lo, hi, s, no_trace);
    EXPECT_NEAR(res.x(0), 1.0, 1e-5);
    EXPECT_NEAR(res.x(1), 1.0, 1e-5);
}

TEST(MinimizeBox, iterates_stay_feasible_and_decrease) {
    auto fg = [](const Eigen::VectorXd &x, Eigen::VectorXd &g) {
        g = (2.0 * (x.array() - 5.0) + 3.0 * std::cos(3.0 * x.sum())).matrix();
        return (x.array() - 5.0).square().sum() + std::sin(3.0 * x.sum());
    };
    const Eigen::VectorXd lo = -Eigen::VectorXd::Ones(3), hi = Eigen::VectorXd::Ones(3);
    double prev = std::numeric_limits<double>::infinity();
    int calls = 0;
    auto trace = [&](int iter, const Eigen::VectorXd &x, double f, const Eigen::VectorXd &) {
        EXPECT_EQ(iter, calls++);
        EXPECT_LE(f, prev);
        prev = f;
        EXPECT_TRUE((x.array() >= -1.0).all() && (x.array() <= 1.0).all());
    };
    minimize_box(fg, Eigen::VectorXd::Zero(3), lo, hi, {}, trace);
    EXPECT_GE(calls, 1);
}

TEST(MinimizeBox, non_finite_objective_throws) {
    auto fg = [](const Eigen::VectorXd &x, Eigen::VectorXd &g) {
        g = Eigen::VectorXd::Ones(x.size());
        return std::numeric_limits<double>::quiet_NaN();
    };
    const Eigen::VectorXd lo = -Eigen::VectorXd::Ones(2), hi = Eigen::VectorXd::Ones(2);
    EXPECT_THROW(minimize_box(fg, Eigen::VectorXd::Zero(2), lo, hi, {}, no_trace), Error);
}

TEST(MinimizeBox, bound_size_mismatch) {
    auto fg = [](const Eigen::VectorXd &x, Eigen::VectorXd &g) {
        g = x;
        return 0.5 * x.squaredNorm();
    };
    EXPECT_THROW(minimize_box(fg, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2), {},
                              no_trace),
                 DimensionError);
}
