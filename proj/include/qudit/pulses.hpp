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

// Control pulses: quadratic B-spline envelopes mixed onto carrier waves.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "qudit/core.hpp"
#include "qudit/operators.hpp"

namespace qudit {

/// Uniform, clamped quadratic B-spline basis on [0, duration].
class BSplineBasis {
   public:
    static constexpr int kDegree = 2;

    BSplineBasis() = default;
    BSplineBasis(int segments, double duration) : segments_(segments), duration_(duration) {
        if (segments < 1) throw DomainError("BSplineBasis: segments must be >= 1");
        if (!(duration > 0.0)) throw DomainError("BSplineBasis: duration must be > 0");
        knots_.reserve(segments + 2 * kDegree + 1);
        for (int r = 0; r < kDegree; ++r) knots_.push_back(0.0);
        for (int i = 0; i <= segments; ++i) knots_.push_back(duration * i / segments);
        for (int r = 0; r < kDegree; ++r) knots_.push_back(duration);
    }

    int segments() const { return segments_; }
    double duration() const { return duration_; }
    int size() const { return segments_ + kDegree; }
    const std::vector<double> &knots() const { return knots_; }

    /// The three basis functions that can be nonzero at t: indices
    /// first .. first+2 with the given values.
    struct Active {
        int first = 0;
        std::array<double, kDegree + 1> values{};
    };

    Active active(double t) const {
        if (!(t >= 0.0 && t <= duration_)) throw DomainError("BSplineBasis: t outside [0, duration]");
        int seg = static_cast<int>(std::floor(t / duration_ * segments_));
        seg = std::clamp(seg, 0, segments_ - 1);
        // Guard against rounding putting t just outside the chosen span.
        while (seg > 0 && t < knots_[seg + kDegree]) --seg;
        while (seg < segments_ - 1 && t >= knots_[seg + kDegree + 1]) ++seg;
        const int span = seg + kDegree;

        Active out;
        out.first = span - kDegree;
        std::array<double, kDegree + 1> left{}, right{};
        auto &n = out.values;
        n[0] = 1.0;
        for (int j = 1; j <= kDegree; ++j) {
            left[j] = t - knots_[span + 1 - j];
            right[j] = knots_[span + j] - t;
            double saved = 0.0;
            for (int r = 0; r < j; ++r) {
                const double tmp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            n[j] = saved;
        }
        return out;
    }

   private:
    int segments_ = 1;
    double duration_ = 1.0;
    std::vector<double> knots_;
};

/// All basis-function values at t.
inline Eigen::VectorXd basis_eval(const BSplineBasis &basis, double t) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(basis.size());
    const auto act = basis.active(t);
    for (int r = 0; r <= BSplineBasis::kDegree; ++r) v(act.first + r) = act.values[r];
    return v;
}

/// Envelope coefficients for every carrier. For carrier f the in-phase curve
/// A_f occupies block 2f and the quadrature curve B_f block 2f+1, each block
/// holding basis.size() weights.
struct PulseSet {
    BSplineBasis basis;
    std::vector<double> carriers;  // rad/ns
    Eigen::VectorXd coeffs;        // rad/ns
    double max_amplitude = 0.0;    // rad/ns, per-coefficient box bound

    static int coeff_count(const BSplineBasis &b, std::size_t n_carriers) {
        return 2 * static_cast<int>(n_carriers) * b.size();
    }

    int index(int carrier, int quadrature, int b) const { return (2 * carrier + quadrature) * basis.size() + b; }
    double duration() const { return basis.duration(); }

    void validate() const {
        if (carriers.empty()) throw DomainError("PulseSet: at least one carrier required");
        if (coeffs.size() != coeff_count(basis, carriers.size())) {
            throw DimensionError("PulseSet: coefficient count does not match basis and carriers");
        }
        if (!(max_amplitude > 0.0)) throw DomainError("PulseSet: max_amplitude must be > 0");
    }

    /// Project every coefficient into [-max_amplitude, max_amplitude].
    void clamp() { coeffs = coeffs.cwiseMax(-max_amplitude).cwiseMin(max_amplitude); }

    /// Largest carrier magnitude.
    double max_carrier() const {
        double w = 0.0;
        for (double c : carriers) w = std::max(w, std::abs(c));
        return w;
    }
};

/// Rotating-frame drive coefficients: H_d = p (a + a^dag) + q i (a^dag - a).
struct ControlAmplitudes {
    double p = 0.0;
    double q = 0.0;
};

/// Scratch-free envelope evaluation when the active basis is already known.
inline ControlAmplitudes envelope(const PulseSet &pulse, const BSplineBasis::Active &act, double t) {
    ControlAmplitudes out;
    const int nb = pulse.basis.size();
    const double *c = pulse.coeffs.data();
    for (std::size_t f = 0; f < pulse.carriers.size(); ++f) {
        const int base_a = static_cast<int>(2 * f) * nb + act.first;
        const int base_b = base_a + nb;
        double a = 0.0, b = 0.0;
        for (int r = 0; r <= BSplineBasis::kDegree; ++r) {
            a += act.values[r] * c[base_a + r];
            b += act.values[r] * c[base_b + r];
        }
        const double w = pulse.carriers[f] * t;
        const double cw = std::cos(w), sw = std::sin(w);
        out.p += a * cw + b * sw;
        out.q += b * cw - a * sw;
    }
    return out;
}

inline ControlAmplitudes envelope(const PulseSet &pulse, double t) { return envelope(pulse, pulse.basis.active(t), t); }

/// p (a + a^dag) + q i (a^dag - a).
inline CMatrix drive_operator(ControlAmplitudes amp, int n) {
    check_levels(n, 2, "drive_hamiltonian");
    CMatrix h = CMatrix::Zero(n, n);
    for (int k = 0; k + 1 < n; ++k) {
        const double s = std::sqrt(static_cast<double>(k + 1));
        h(k, k + 1) = Complex(amp.p, -amp.q) * s;
        h(k + 1, k) = Complex(amp.p, amp.q) * s;
    }
    return h;
}

inline CMatrix drive_hamiltonian(const PulseSet &pulse, double t, int n) { return drive_operator(envelope(pulse, t), n); }

/// Adjacent-level transition frequencies E_{k+1} - E_k of the essential
/// subspace, in order, without repeats.
inline std::vector<double> default_carriers(const GateTask &task) {
    task.validate();
    std::vector<double> out;
    for (int k = 0; k + 1 < task.essential_dim(); ++k) {
        const double w = transition_frequency(k + 1, k, task.oscillator);
        if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
    }
    return out;
}

/// Pulse with every coefficient zero.
inline PulseSet zero_pulse(const BSplineBasis &basis, std::vector<double> carriers, double max_amplitude) {
    PulseSet p;
    p.basis = basis;
    p.carriers = std::move(carriers);
    p.coeffs = Eigen::VectorXd::Zero(PulseSet::coeff_count(p.basis, p.carriers.size()));
    p.max_amplitude = max_amplitude;
    return p;
}

namespace detail {

/// Boehm knot insertion for one spline curve of degree 2.
inline void insert_knot(std::vector<double> &knots, std::vector<double> &ctrl, double x) {
    constexpr int p = BSplineBasis::kDegree;
    int span = p;
    while (span + 1 < static_cast<int>(knots.size()) - p - 1 && x >= knots[span + 1]) ++span;
    std::vector<double> next(ctrl.size() + 1);
    for (int i = 0; i <= span - p; ++i) next[i] = ctrl[i];
    for (int i = span - p + 1; i <= span; ++i) {
        const double alpha = (x - knots[i]) / (knots[i + p] - knots[i]);
        next[i] = alpha * ctrl[i] + (1.0 - alpha) * ctrl[i - 1];
    }
    for (int i = span + 1; i < static_cast<int>(next.size()); ++i) next[i] = ctrl[i - 1];
    knots.insert(knots.begin() + span + 1, x);
    ctrl = std::move(next);
}

}  // namespace detail

/// Same envelopes on a basis with twice as many segments, obtained by
/// inserting a knot at every segment midpoint.
inline PulseSet refine(const PulseSet &pulse) {
    pulse.validate();
    const BSplineBasis &old = pulse.basis;
    PulseSet out = zero_pulse(BSplineBasis(2 * old.segments(), old.duration()), pulse.carriers, pulse.max_amplitude);
    const int nb = old.size();
    for (int block = 0; block < 2 * static_cast<int>(pulse.carriers.size()); ++block) {
        std::vector<double> knots = old.knots();
        std::vector<double> ctrl(pulse.coeffs.data() + block * nb, pulse.coeffs.data() + (block + 1) * nb);
        for (int s = 0; s < old.segments(); ++s) {
            const double mid = 0.5 * (old.knots()[s + 2] + old.knots()[s + 3]);
            detail::insert_knot(knots, ctrl, mid);
        }
        for (int b = 0; b < out.basis.size(); ++b) out.coeffs(block * out.basis.size() + b) = ctrl[b];
    }
    return out;
}

}  // namespace qudit
