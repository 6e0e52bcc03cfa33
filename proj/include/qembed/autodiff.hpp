// Copyright 2026 The qembed Authors
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

#ifndef QEMBED_AUTODIFF_HPP_
#define QEMBED_AUTODIFF_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qembed/error.hpp"
#include "qembed/linalg.hpp"

namespace qembed {

inline constexpr double kProbabilityClamp = 1e-12;

/// Trainable affine reduction y = w^T x + b from the embedding to the feature-map inputs.
struct ReductionLayer {
    Mat w;  // in_dim x n_out
    Mat b;  // 1 x n_out

    std::size_t in_dim() const {
        return static_cast<std::size_t>(w.rows());
    }
    std::size_t out_dim() const {
        return static_cast<std::size_t>(w.cols());
    }

    static ReductionLayer zeros(std::size_t in_dim, std::size_t n_out) {
        return {Mat::Zero(in_dim, n_out), Mat::Zero(1, n_out)};
    }
};

inline std::vector<double> reduce(std::span<const double> x, const ReductionLayer &layer) {
    if (x.size() != layer.in_dim()) {
        throw ShapeError("reduction expects input of length " + std::to_string(layer.in_dim()) + ", got " +
                         std::to_string(x.size()));
    }
    if (layer.b.rows() != 1 || layer.b.cols() != layer.w.cols()) {
        throw ShapeError("reduction bias shape does not match weight columns");
    }
    std::vector<double> y(layer.out_dim());
    for (std::size_t j = 0; j < y.size(); ++j) {
        double acc = layer.b(0, j);
        for (std::size_t i = 0; i < x.size(); ++i) {
            acc += layer.w(i, j) * x[i];
        }
        y[j] = acc;
    }
    return y;
}

inline double clamp_probability(double p) {
    return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

/// L = -[t log P(0) + (1 - t) log P(1)].
///
/// Note the label convention: P(0) is the probability assigned to label 1.
inline double bce_loss(double p0, double p1, int y_true) {
    const double t = static_cast<double>(y_true);
    return -(t * std::log(clamp_probability(p0)) + (1.0 - t) * std::log(clamp_probability(p1)));
}

/// dL/dp0 with p1 = 1 - p0 substituted, evaluated at the clamped probabilities.
inline double bce_grad_p0(double p0, int y_true) {
    const double t = static_cast<double>(y_true);
    return -t / clamp_probability(p0) + (1.0 - t) / clamp_probability(1.0 - p0);
}

/// Two-point shift [f(theta + pi/2 e_i) - f(theta - pi/2 e_i)] / 2.
///
/// Exact for any parameter entering through a single gate exp(-i a G / 2) with G^2 = I,
/// which covers RY and (up to global phase) U1.
template <typename Eval>
double param_shift_grad(Eval &&circuit_eval, std::vector<double> theta, std::size_t index) {
    if (index >= theta.size()) {
        throw IndexError("parameter-shift index out of range");
    }
    const double base = theta[index];
    const double shift = std::numbers::pi / 2;
    theta[index] = base + shift;
    const double plus = circuit_eval(std::as_const(theta));
    theta[index] = base - shift;
    const double minus = circuit_eval(std::as_const(theta));
    const double g = (plus - minus) / 2;
    if (!std::isfinite(g)) {
        throw NumericalError("non-finite parameter-shift evaluation");
    }
    return g;
}

/// Central difference [f(theta + h e_i) - f(theta - h e_i)] / (2h).
template <typename Fn>
double finite_diff_grad(Fn &&f, std::vector<double> theta, std::size_t index, double h = 1e-5) {
    if (index >= theta.size()) {
        throw IndexError("finite-difference index out of range");
    }
    const double base = theta[index];
    theta[index] = base + h;
    const double plus = f(std::as_const(theta));
    theta[index] = base - h;
    const double minus = f(std::as_const(theta));
    const double g = (plus - minus) / (2 * h);
    if (!std::isfinite(g)) {
        throw NumericalError("non-finite finite-difference evaluation");
    }
    return g;
}

}  // namespace qembed

#endif  // QEMBED_AUTODIFF_HPP_
