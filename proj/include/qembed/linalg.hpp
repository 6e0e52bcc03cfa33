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

#ifndef QEMBED_LINALG_HPP_
#define QEMBED_LINALG_HPP_

#include <cmath>
#include <cstddef>
#include <random>

#include <Eigen/Dense>

namespace qembed {

/// Dense row-major matrix. Vectors are stored as 1 x n rows.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor>;

/// Glorot-uniform fill on [-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))]
/// with fan_in = rows and fan_out = cols.
inline Mat xavier_uniform(std::size_t rows, std::size_t cols, std::mt19937_64 &rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = dist(rng);
    }
    return m;
}

inline Mat normal_fill(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64 &rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = dist(rng);
    }
    return m;
}

inline bool all_finite(const Mat &m) {
    return m.allFinite();
}

}  // namespace qembed

#endif  // QEMBED_LINALG_HPP_
