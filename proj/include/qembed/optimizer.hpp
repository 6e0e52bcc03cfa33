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

#ifndef QEMBED_OPTIMIZER_HPP_
#define QEMBED_OPTIMIZER_HPP_

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "qembed/error.hpp"
#include "qembed/linalg.hpp"

namespace qembed {

enum class OptimizerKind { Sgd, Momentum, Adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Momentum;
    double momentum = 0.9;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

inline std::string optimizer_name(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::Sgd:
            return "sgd";
        case OptimizerKind::Momentum:
            return "momentum";
        case OptimizerKind::Adam:
            return "adam";
    }
    return "?";
}

inline OptimizerKind parse_optimizer(const std::string &s) {
    if (s == "sgd") {
        return OptimizerKind::Sgd;
    }
    if (s == "momentum" || s == "sgd-momentum") {
        return OptimizerKind::Momentum;
    }
    if (s == "adam") {
        return OptimizerKind::Adam;
    }
    throw ParseError("unknown optimizer '" + s + "' (expected sgd, momentum or adam)");
}

/// First-order optimiser over a fixed list of parameter matrices.
/// Momentum uses the heavy-ball form v <- beta v + g, p <- p - lr v.
class Optimizer {
   public:
    Optimizer(OptimizerConfig cfg, double lr) : cfg_(cfg), lr_(lr) {
    }

    void step(const std::vector<Mat *> &params, const std::vector<const Mat *> &grads) {
        if (params.size() != grads.size()) {
            throw ShapeError("optimizer received mismatched parameter and gradient lists");
        }
        if (first_.empty()) {
            for (auto *p : params) {
                first_.push_back(Mat::Zero(p->rows(), p->cols()));
                second_.push_back(Mat::Zero(p->rows(), p->cols()));
            }
        }
        ++t_;
        for (std::size_t i = 0; i < params.size(); ++i) {
            Mat &p = *params[i];
            const Mat &g = *grads[i];
            switch (cfg_.kind) {
                case OptimizerKind::Sgd:
                    p -= lr_ * g;
                    break;
                case OptimizerKind::Momentum:
                    first_[i] = cfg_.momentum * first_[i] + g;
                    p -= lr_ * first_[i];
                    break;
                case OptimizerKind::Adam: {
                    first_[i] = cfg_.beta1 * first_[i] + (1.0 - cfg_.beta1) * g;
                    second_[i] = cfg_.beta2 * second_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
                    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
                    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
                    p.array() -= lr_ * (first_[i].array() / c1) / ((second_[i].array() / c2).sqrt() + cfg_.eps);
                    break;
                }
            }
        }
    }

   private:
    OptimizerConfig cfg_;
    double lr_;
    long long t_ = 0;
    std::vector<Mat> first_;
    std::vector<Mat> second_;
};

}  // namespace qembed

#endif  // QEMBED_OPTIMIZER_HPP_
