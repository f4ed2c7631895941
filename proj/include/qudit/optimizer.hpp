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

// Limited-memory BFGS with projection onto a coordinate box.
//
// Variables sitting on a bound with the gradient pushing outward are frozen
// for the current iteration; the quasi-Newton direction is computed on the
// remaining free variables and the trial points are projected back into the
// box. Every accepted step satisfies an Armijo decrease along the projected
// path, so the objective sequence is non-increasing.

#include <cmath>
#include <deque>
#include <functional>
#include <limits>

#include <Eigen/Dense>

#include "qudit/core.hpp"

namespace qudit {

struct BoxLbfgsSettings {
    int max_iterations = 200;
    int memory = 10;
    /// Stop when the projected gradient infinity norm falls below this.
    double gradient_tol = 1e-8;
    int max_backtracks = 30;
    double armijo = 1e-4;
    /// Infinity-norm length of the very first (steepest-descent) trial step.
    double initial_step = 0.1;
};

struct BoxLbfgsResult {
    Eigen::VectorXd x;
    double f = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

/// fg(x, grad) returns f(x) and writes grad. on_iter(iteration, x, f, grad)
/// is called once for the starting point (iteration 0) and after every
/// accepted step.
template <typename ObjectiveFn, typename IterationFn>
BoxLbfgsResult minimize_box(ObjectiveFn &&fg, Eigen::VectorXd x, const Eigen::VectorXd &lower,
                            const Eigen::VectorXd &upper, const BoxLbfgsSettings &settings, IterationFn &&on_iter) {
    const Eigen::Index n = x.size();
    if (lower.size() != n || upper.size() != n) throw DimensionError("minimize_box: bound size mismatch");
    auto project = [&](const Eigen::VectorXd &v) { return Eigen::VectorXd(v.cwiseMax(lower).cwiseMin(upper)); };
    auto check_finite = [](double f) {
        if (!std::isfinite(f)) throw Error("minimize_box: objective is not finite");
    };

    BoxLbfgsResult res;
    x = project(x);
    Eigen::VectorXd g(n);
    double f = fg(x, g);
    ++res.evaluations;
    check_finite(f);
    on_iter(0, x, f, g);

    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;

    auto projected_gradient_norm = [&](const Eigen::VectorXd &xv, const Eigen::VectorXd &gv) {
        return (project(xv - gv) - xv).cwiseAbs().maxCoeff();
    };

    for (int iter = 1; iter <= settings.max_iterations; ++iter) {
        if (projected_gradient_norm(x, g) < settings.gradient_tol) {
            res.converged = true;
            break;
        }
        // Free set: not pinned at a bound with the gradient pushing outward.
        Eigen::VectorXd free_mask(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool at_lower = x(i) <= lower(i) && g(i) > 0.0;
            const bool at_upper = x(i) >= upper(i) && g(i) < 0.0;
            free_mask(i) = (at_lower || at_upper) ? 0.0 : 1.0;
        }
        const Eigen::VectorXd gf = g.cwiseProduct(free_mask);

        auto steepest = [&]() {
            const double gn = gf.cwiseAbs().maxCoeff();
            return Eigen::VectorXd(gn > 0.0 ? Eigen::VectorXd(-gf * (settings.initial_step / gn))
                                            : Eigen::VectorXd::Zero(n));
        };

        Eigen::VectorXd d;
        if (s_hist.empty()) {
            d = steepest();
        } else {
            // Two-loop recursion.
            Eigen::VectorXd q = gf;
            const std::size_t m = s_hist.size();
            std::vector<double> alpha(m);
            for (std::size_t k = m; k-- > 0;) {
                alpha[k] = rho_hist[k] * s_hist[k].cwiseProduct(free_mask).dot(q);
                q -= alpha[k] * y_hist[k].cwiseProduct(free_mask);
            }
            const double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
            Eigen::VectorXd r = gamma * q;
            for (std::size_t k = 0; k < m; ++k) {
                const double beta = rho_hist[k] * y_hist[k].cwiseProduct(free_mask).dot(r);
                r += (alpha[k] - beta) * s_hist[k].cwiseProduct(free_mask);
            }
            d = -r.cwiseProduct(free_mask);
            if (!(d.dot(g) < 0.0)) {
                s_hist.clear();
                y_hist.clear();
                rho_hist.clear();
                d = steepest();
            }
        }
        if (d.isZero(0.0)) {
            res.converged = true;
            break;
        }

        // Backtracking along the projected path.
        Eigen::VectorXd x_new, g_new(n);
        double f_new = f;
        bool accepted = false;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            double step = 1.0;
            for (int bt = 0; bt < settings.max_backtracks; ++bt, step *= 0.5) {
                x_new = project(x + step * d);
                const Eigen::VectorXd dx = x_new - x;
                if (dx.isZero(0.0)) break;
                f_new = fg(x_new, g_new);
                ++res.evaluations;
                check_finite(f_new);
                if (f_new <= f + settings.armijo * g.dot(dx)) {
                    accepted = true;
                    break;
                }
            }
            if (!accepted) {
                // Quasi-Newton direction failed; retry once from steepest descent.
                s_hist.clear();
                y_hist.clear();
                rho_hist.clear();
                d = steepest();
            }
        }
        if (!accepted) break;

        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * y.squaredNorm() && sy > 0.0) {
            if (static_cast<int>(s_hist.size()) == settings.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
        }
        x = x_new;
        f = f_new;
        g = g_new;
        res.iterations = iter;
        on_iter(iter, x, f, g);
    }
    res.x = x;
    res.f = f;
    if (!res.converged) res.converged = projected_gradient_norm(x, g) < settings.gradient_tol;
    return res;
}

}  // namespace qudit
