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

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qudit {

/// Largest simulated level count supported. Matrices use fixed-capacity
/// storage of this size so the inner propagation loop never allocates.
inline constexpr int kMaxLevels = 12;

using Complex = std::complex<double>;

using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxLevels, kMaxLevels>;
using RMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxLevels, kMaxLevels>;
using CVector = Eigen::Matrix<Complex, Eigen::Dynamic, 1, 0, kMaxLevels, 1>;
using RVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxLevels, 1>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// GHz (cycles per ns) to angular rad/ns.
constexpr double ghz_to_rad_per_ns(double ghz) { return kTwoPi * ghz; }
constexpr double rad_per_ns_to_ghz(double w) { return w / kTwoPi; }

class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Matrix or level-count mismatch.
class DimensionError : public Error {
   public:
    using Error::Error;
};

/// Argument outside the domain of a function (time outside [0, tau], bad index, ...).
class DomainError : public Error {
   public:
    using Error::Error;
};

/// Time integration lost unitarity beyond the configured tolerance.
class PropagationError : public Error {
   public:
    PropagationError(const std::string &what, double defect) : Error(what), defect_(defect) {}
    double defect() const { return defect_; }

   private:
    double defect_;
};

/// Malformed configuration or serialized artifact.
class ConfigError : public Error {
   public:
    using Error::Error;
};

/// Slope-fit window does not contain enough samples.
class WindowError : public Error {
   public:
    using Error::Error;
};

inline void check_levels(int n, int min_levels, const char *what) {
    if (n < min_levels || n > kMaxLevels) {
        throw DimensionError(std::string(what) + ": level count " + std::to_string(n) + " outside [" +
                             std::to_string(min_levels) + ", " + std::to_string(kMaxLevels) + "]");
    }
}

/// max |A - B| entrywise.
template <typename A, typename B>
double max_abs_diff(const Eigen::MatrixBase<A> &a, const Eigen::MatrixBase<B> &b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("max_abs_diff: shape mismatch");
    return (a - b).cwiseAbs().maxCoeff();
}

/// max |U^dagger U - I| entrywise.
inline double unitarity_defect(const CMatrix &u) {
    return (u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
}

}  // namespace qudit
