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

// Time-ordered propagation of the driven qudit. Each step applies the exact
// exponential of the midpoint Hamiltonian, exp(-i H(t + dt/2) dt), obtained
// from an eigendecomposition, so every step is unitary to rounding.

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "qudit/core.hpp"
#include "qudit/operators.hpp"
#include "qudit/pulses.hpp"

namespace qudit {

struct PropagationSettings {
    /// Time steps per ns. Zero selects the default resolution
    /// dt = min(0.002 ns, (2 pi / max carrier) / 40).
    double steps_per_ns = 0.0;
    double unitarity_tol = 1e-10;
    /// If positive, record U(t) at this many uniform intervals (plus t = 0).
    /// The step count is rounded up to a multiple of it.
    int checkpoint_intervals = 0;

    bool operator==(const PropagationSettings &) const = default;
};

inline constexpr int kMinSteps = 100;
inline constexpr double kMaxStepNs = 0.002;
inline constexpr double kSamplesPerCarrierPeriod = 40.0;

inline int step_count(const PulseSet &pulse, const PropagationSettings &settings) {
    const double tau = pulse.duration();
    double dt;
    if (settings.steps_per_ns > 0.0) {
        dt = 1.0 / settings.steps_per_ns;
    } else {
        dt = kMaxStepNs;
        const double w = pulse.max_carrier();
        if (w > 0.0) dt = std::min(dt, kTwoPi / w / kSamplesPerCarrierPeriod);
    }
    int n = std::max(kMinSteps, static_cast<int>(std::ceil(tau / dt - 1e-9)));
    if (settings.checkpoint_intervals > 0) {
        const int c = settings.checkpoint_intervals;
        n = ((n + c - 1) / c) * c;
    }
    return n;
}

struct Checkpoint {
    double t = 0.0;
    CMatrix u;
};

struct PropagatorResult {
    CMatrix final_unitary;
    std::vector<Checkpoint> checkpoints;
    double unitarity_defect = 0.0;
    int steps = 0;
};

/// Exponential of one midpoint step, plus what is needed to differentiate it
/// with respect to the drive amplitudes p and q.
///
/// When the static Hamiltonian is diagonal, H = D + g a + conj(g) a^dag with a
/// single complex g, so H = P T P^dag with P = diag(e^{-i k arg g}) and T real
/// symmetric tridiagonal. That case uses a real tridiagonal eigensolver; any
/// other static Hamiltonian falls back to a dense Hermitian solver.
class StepExponential {
   public:
    explicit StepExponential(const CMatrix &h_static) : h_static_(h_static), n_(static_cast<int>(h_static.rows())) {
        if (h_static.rows() != h_static.cols()) throw DimensionError("propagate: static Hamiltonian not square");
        check_levels(n_, 2, "propagate");
        diagonal_ = true;
        for (int i = 0; i < n_ && diagonal_; ++i) {
            if (h_static(i, i).imag() != 0.0) diagonal_ = false;
            for (int j = 0; j < n_; ++j) {
                if (i != j && h_static(i, j) != Complex(0.0, 0.0)) {
                    diagonal_ = false;
                    break;
                }
            }
        }
        if (max_abs_diff(h_static, h_static.adjoint()) > 1e-12 * (1.0 + h_static.cwiseAbs().maxCoeff())) {
            throw DomainError("propagate: static Hamiltonian is not Hermitian");
        }
        diag_ = h_static.diagonal().real();
        off_.resize(n_ - 1);
        for (int k = 0; k + 1 < n_; ++k) sqrt_k_[k] = std::sqrt(static_cast<double>(k + 1));
    }

    int levels() const { return n_; }

    /// Factor H = h_static + drive(amp) and form exp(-i H dt).
    void factor(ControlAmplitudes amp, double dt) {
        dt_ = dt;
        if (diagonal_) {
            const Complex g(amp.p, -amp.q);  // coefficient of a
            const double r = std::abs(g);
            phi_ = r > 0.0 ? std::arg(g) : 0.0;
            for (int k = 0; k + 1 < n_; ++k) off_(k) = r * sqrt_k_[k];
            tri_.computeFromTridiagonal(diag_, off_, Eigen::ComputeEigenvectors);
            lambda_ = tri_.eigenvalues();
            q_ = tri_.eigenvectors();
            orthonormalize(q_);
            const RMatrix &q = q_;
            RVector c(n_), s(n_);
            for (int k = 0; k < n_; ++k) {
                c(k) = std::cos(lambda_(k) * dt);
                s(k) = std::sin(lambda_(k) * dt);
            }
            const RMatrix re = q * c.asDiagonal() * q.transpose();
            const RMatrix im = -(q * s.asDiagonal() * q.transpose());
            for (int k = 0; k < n_; ++k) pk_[k] = std::polar(1.0, -k * phi_);
            step_.resize(n_, n_);
            for (int j = 0; j < n_; ++j) {
                for (int k = 0; k < n_; ++k) step_(j, k) = pk_[j] * Complex(re(j, k), im(j, k)) * std::conj(pk_[k]);
            }
        } else {
            CMatrix h = h_static_ + drive_operator(amp, n_);
            dense_.compute(h, Eigen::ComputeEigenvectors);
            lambda_ = dense_.eigenvalues();
            const CMatrix &e = dense_.eigenvectors();
            CVector ph(n_);
            for (int k = 0; k < n_; ++k) ph(k) = std::polar(1.0, -lambda_(k) * dt);
            step_ = e * ph.asDiagonal() * e.adjoint();
        }
    }

    const CMatrix &step() const { return step_; }

    /// (Re Tr(M dS/dp), Re Tr(M dS/dq)) for the most recent factorization.
    std::pair<double, double> directional(const CMatrix &m) const {
        CMatrix mt, gp, gq;
        if (diagonal_) {
            const RMatrix &q = q_;
            RMatrix a = RMatrix::Zero(n_, n_);
            for (int k = 0; k + 1 < n_; ++k) a(k, k + 1) = sqrt_k_[k];
            const RMatrix ar = q.transpose() * a * q;
            const Complex alpha = std::polar(1.0, -phi_);
            const Complex i(0.0, 1.0);
            gp = alpha * ar.cast<Complex>() + std::conj(alpha) * ar.transpose().cast<Complex>();
            gq = (i * std::conj(alpha)) * ar.transpose().cast<Complex>() - (i * alpha) * ar.cast<Complex>();
            CMatrix pm(n_, n_);
            for (int j = 0; j < n_; ++j) {
                for (int k = 0; k < n_; ++k) pm(j, k) = std::conj(pk_[j]) * m(j, k) * pk_[k];
            }
            mt = q.transpose().cast<Complex>() * pm * q.cast<Complex>();
        } else {
            const CMatrix &e = dense_.eigenvectors();
            gp = e.adjoint() * drive_operator({1.0, 0.0}, n_) * e;
            gq = e.adjoint() * drive_operator({0.0, 1.0}, n_) * e;
            mt = e.adjoint() * m * e;
        }
        Complex tp(0.0, 0.0), tq(0.0, 0.0);
        for (int j = 0; j < n_; ++j) {
            for (int k = 0; k < n_; ++k) {
                const Complex phi = divided_difference(j, k);
                tp += mt(k, j) * phi * gp(j, k);
                tq += mt(k, j) * phi * gq(j, k);
            }
        }
        return {tp.real(), tq.real()};
    }

   private:
    /// One Newton-Schulz step toward the nearest orthogonal matrix.
    static void orthonormalize(RMatrix &q) {
        const RMatrix e = q.transpose() * q - RMatrix::Identity(q.rows(), q.cols());
        q -= 0.5 * q * e;
    }

    /// Divided difference of exp(-i lambda dt) between eigenvalues j and k.
    Complex divided_difference(int j, int k) const {
        const double half = 0.5 * (lambda_(j) - lambda_(k)) * dt_;
        const double sinc = std::abs(half) < 1e-8 ? 1.0 - half * half / 6.0 : std::sin(half) / half;
        return Complex(0.0, -dt_) * std::polar(1.0, -0.5 * (lambda_(j) + lambda_(k)) * dt_) * sinc;
    }

    CMatrix h_static_;
    int n_;
    bool diagonal_ = false;
    RVector diag_;
    RVector off_;
    std::array<double, kMaxLevels> sqrt_k_{};
    std::array<Complex, kMaxLevels> pk_{};
    double phi_ = 0.0;
    double dt_ = 0.0;
    RVector lambda_;
    RMatrix q_;
    CMatrix step_;
    Eigen::SelfAdjointEigenSolver<RMatrix> tri_;
    Eigen::SelfAdjointEigenSolver<CMatrix> dense_;
};

/// Uniform step grid over [t0, t1].
struct TimeGrid {
    double t0 = 0.0;
    double t1 = 0.0;
    int steps = 0;

    double dt() const { return (t1 - t0) / steps; }
    double midpoint(int m) const { return t0 + (m + 0.5) * dt(); }  // m = 0 .. steps-1
    double node(int k) const { return k == steps ? t1 : t0 + k * dt(); }
};

/// Propagate over an arbitrary sub-interval of the pulse with a given step
/// count. checkpoint_stride > 0 records U at every stride-th node.
inline PropagatorResult propagate_interval(const CMatrix &h_static, const PulseSet &pulse, const TimeGrid &grid,
                                           int checkpoint_stride, double unitarity_tol) {
    pulse.validate();
    if (grid.steps < 1) throw DomainError("propagate: need at least one step");
    if (grid.t0 < 0.0 || grid.t1 > pulse.duration() || grid.t1 <= grid.t0) {
        throw DomainError("propagate: interval outside [0, duration]");
    }
    StepExponential stepper(h_static);
    const int n = stepper.levels();
    PropagatorResult out;
    out.steps = grid.steps;
    CMatrix u = CMatrix::Identity(n, n);
    double defect = 0.0;
    if (checkpoint_stride > 0) out.checkpoints.push_back({grid.t0, u});
    const double dt = grid.dt();
    for (int m = 0; m < grid.steps; ++m) {
        const double tm = grid.midpoint(m);
        stepper.factor(envelope(pulse, tm), dt);
        u = stepper.step() * u;
        if (checkpoint_stride > 0 && (m + 1) % checkpoint_stride == 0) {
            defect = std::max(defect, unitarity_defect(u));
            out.checkpoints.push_back({grid.node(m + 1), u});
        }
    }
    defect = std::max(defect, unitarity_defect(u));
    out.final_unitary = u;
    out.unitarity_defect = defect;
    if (!(defect <= unitarity_tol)) {
        throw PropagationError("propagate: unitarity defect " + std::to_string(defect) + " exceeds tolerance", defect);
    }
    return out;
}

/// U(tau) for H(t) = h_static + H_d(t).
inline PropagatorResult propagate(const CMatrix &h_static, const PulseSet &pulse,
                                  const PropagationSettings &settings = {}) {
    if (h_static.rows() < 2) throw DimensionError("propagate: need at least two levels");
    const int steps = step_count(pulse, settings);
    const int stride = settings.checkpoint_intervals > 0 ? steps / settings.checkpoint_intervals : 0;
    return propagate_interval(h_static, pulse, {0.0, pulse.duration(), steps}, stride, settings.unitarity_tol);
}

inline PropagatorResult propagate(const RMatrix &h_static, const PulseSet &pulse,
                                  const PropagationSettings &settings = {}) {
    return propagate(CMatrix(h_static.cast<Complex>()), pulse, settings);
}

/// Evolution under H_eff = H0 + eps V with the same drive.
inline PropagatorResult propagate_shifted(const OscillatorSpec &spec, double eps, const PulseSet &pulse,
                                          const PropagationSettings &settings = {}) {
    return propagate(h_eff(spec, eps), pulse, settings);
}

}  // namespace qudit
