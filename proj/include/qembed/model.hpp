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

#ifndef QEMBED_MODEL_HPP_
#define QEMBED_MODEL_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qembed/autodiff.hpp"
#include "qembed/embedding.hpp"
#include "qembed/encoder.hpp"
#include "qembed/error.hpp"
#include "qembed/linalg.hpp"

namespace qembed {

/// Architecture choices needed to build a fresh HybridModel.
struct ModelConfig {
    bool use_encoder = false;
    EncoderConfig encoder;
    /// Embedding width in bypass mode; ignored when the encoder is active.
    std::size_t input_dim = 16;
    FeatureMapSpec feature_map;
    std::size_t ansatz_layers = 0;

    AnsatzSpec ansatz() const {
        return {feature_map.n_qubits, ansatz_layers};
    }
};

/// Full trainable state: optional encoder, reduction layer and ansatz angles.
///
/// In bypass mode the inputs are precomputed embeddings consumed directly by the
/// reduction layer. Otherwise inputs are flattened images of the encoder geometry.
struct HybridModel {
    bool use_encoder = false;
    EncoderConfig encoder_config;
    EncoderWeights encoder;
    ReductionLayer reduction;
    Mat theta;  // 1 x ansatz parameter count
    FeatureMapSpec feature_map;
    AnsatzSpec ansatz;
    std::size_t readout_qubit = 0;

    std::size_t input_dim() const {
        return use_encoder ? encoder_config.input_dim() : reduction.in_dim();
    }

    std::span<const double> theta_span() const {
        return {theta.data(), static_cast<std::size_t>(theta.size())};
    }

    void validate() const {
        feature_map.validate();
        ansatz.validate();
        if (feature_map.n_qubits != ansatz.n_qubits) {
            throw ShapeError("feature map and ansatz disagree on qubit count");
        }
        if (use_encoder) {
            validate_encoder_weights(encoder, encoder_config);
            if (encoder_config.out_dim != reduction.in_dim()) {
                throw ShapeError("encoder out_dim does not match reduction input");
            }
        }
        if (reduction.out_dim() != feature_map.n_qubits || reduction.b.cols() != reduction.w.cols() ||
            reduction.b.rows() != 1) {
            throw ShapeError("reduction output does not match feature-map qubit count");
        }
        if (theta.rows() != 1 || static_cast<std::size_t>(theta.cols()) != ansatz.parameter_count()) {
            throw ShapeError("ansatz parameter vector has the wrong length");
        }
        if (readout_qubit >= feature_map.n_qubits) {
            throw IndexError("readout qubit out of range");
        }
        if (!reduction.w.allFinite() || !reduction.b.allFinite() || !theta.allFinite()) {
            throw NumericalError("model contains non-finite parameters");
        }
    }
};

/// Shrink factor on the Glorot draw for the reduction layer.
inline constexpr double kReductionInitScale = 0.1;

/// Reduction layer scaled Glorot-uniform with zero bias; ansatz angles uniform on
/// [-0.1, 0.1] so an untrained model starts close to the bare feature-map classifier.

inline HybridModel init_hybrid_model(const ModelConfig &cfg, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    HybridModel m;
    m.use_encoder = cfg.use_encoder;
    m.feature_map = cfg.feature_map;
    m.ansatz = cfg.ansatz();
    std::size_t in_dim = cfg.input_dim;
    if (cfg.use_encoder) {
        m.encoder_config = cfg.encoder;
        m.encoder = init_encoder_weights(cfg.encoder, rng);
        in_dim = cfg.encoder.out_dim;
    }
    if (in_dim == 0) {
        throw ShapeError("reduction input dimension must be positive");
    }
    m.reduction.w = kReductionInitScale * xavier_uniform(in_dim, cfg.feature_map.n_qubits, rng);
    m.reduction.b = Mat::Zero(1, cfg.feature_map.n_qubits);
    std::uniform_real_distribution<double> angle(-0.1, 0.1);
    m.theta = Mat(1, m.ansatz.parameter_count());
    for (Eigen::Index i = 0; i < m.theta.size(); ++i) {
        m.theta(0, i) = angle(rng);
    }
    m.validate();
    return m;
}

/// Calls f(name, matrix) over every trainable matrix; encoder first when active.
template <typename M, typename F>
void for_each_parameter(M &model, F &&f) {
    if (model.use_encoder) {
        for_each_encoder_parameter(model.encoder, f);
    }
    f(std::string("reduce.w"), model.reduction.w);
    f(std::string("reduce.b"), model.reduction.b);
    f(std::string("ansatz.theta"), model.theta);
}

inline bool is_encoder_parameter(const std::string &name) {
    return name.rfind("encoder.", 0) == 0 || name.rfind("layer.", 0) == 0 || name.rfind("head.", 0) == 0;
}

struct GradientRecord {
    std::string name;
    Mat value;
};

using Gradients = std::vector<GradientRecord>;

/// Intermediates of one forward evaluation, consumed by backward().
struct ForwardCache {
    std::vector<double> input;
    std::optional<EncoderCache> encoder;
    std::vector<double> embedding;
    std::vector<double> angles;  // reduction output fed to the feature map
    double p0 = 0.0;
    double p1 = 0.0;
    double loss = 0.0;
    int label = 0;
    bool valid = false;
};

inline ForwardCache forward(const HybridModel &model, std::span<const double> input, int label) {
    if (input.size() != model.input_dim()) {
        throw ShapeError("model expects input of length " + std::to_string(model.input_dim()) + ", got " +
                         std::to_string(input.size()));
    }
    ForwardCache c;
    c.input.assign(input.begin(), input.end());
    if (model.use_encoder) {
        c.encoder = encode_with_cache(image_from_flat(input, model.encoder_config), model.encoder,
                                      model.encoder_config);
        const auto &out = c.encoder->output;
        c.embedding.assign(out.data(), out.data() + out.size());
    } else {
        c.embedding = c.input;
    }
    c.angles = reduce(c.embedding, model.reduction);
    auto q = quantum_forward(c.angles, model.theta_span(), model.feature_map, model.ansatz, model.readout_qubit);
    c.p0 = q.p0;
    c.p1 = q.p1;
    c.label = label;
    c.loss = bce_loss(c.p0, c.p1, label);
    if (!std::isfinite(c.loss)) {
        throw NumericalError("non-finite loss");
    }
    c.valid = true;
    return c;
}

/// Class probabilities only; skips loss and caching.
inline QuantumForwardResult forward_probabilities(const HybridModel &model, std::span<const double> input) {
    if (input.size() != model.input_dim()) {
        throw ShapeError("model expects input of length " + std::to_string(model.input_dim()) + ", got " +
                         std::to_string(input.size()));
    }
    std::vector<double> embedding;
    if (model.use_encoder) {
        auto out = encode(image_from_flat(input, model.encoder_config), model.encoder, model.encoder_config);
        embedding.assign(out.data(), out.data() + out.size());
    } else {
        embedding.assign(input.begin(), input.end());
    }
    auto angles = reduce(embedding, model.reduction);
    return quantum_forward(angles, model.theta_span(), model.feature_map, model.ansatz, model.readout_qubit);
}

inline double sample_loss(const HybridModel &model, std::span<const double> input, int label) {
    auto q = forward_probabilities(model, input);
    return bce_loss(q.p0, q.p1, label);
}

/// dp0/d(angle) for each reduction output. A feature enters every repetition of the
/// feature map, so the two-point shift is applied to each U1 occurrence separately and
/// the contributions are summed, times the feature-map scale.
inline std::vector<double> feature_gradients(const HybridModel &model, std::span<const double> angles) {
    const auto gates = build_classifier_circuit(angles, model.theta_span(), model.feature_map, model.ansatz);
    const auto &fm = model.feature_map;
    std::vector<double> occurrence(fm.repetitions * fm.n_qubits);
    std::vector<std::size_t> gate_index(occurrence.size());
    for (std::size_t r = 0; r < fm.repetitions; ++r) {
        for (std::size_t q = 0; q < fm.n_qubits; ++q) {
            const std::size_t k = r * fm.n_qubits + q;
            gate_index[k] = feature_gate_index(fm, r, q);
            occurrence[k] = gates[gate_index[k]].angle;
        }
    }
    auto eval = [&](const std::vector<double> &a) {
        auto shifted = gates;
        for (std::size_t k = 0; k < a.size(); ++k) {
            shifted[gate_index[k]].angle = a[k];
        }
        return circuit_p0(shifted, fm.n_qubits, model.readout_qubit);
    };
    std::vector<double> grad(fm.n_qubits, 0.0);
    for (std::size_t r = 0; r < fm.repetitions; ++r) {
        for (std::size_t q = 0; q < fm.n_qubits; ++q) {
            grad[q] += param_shift_grad(eval, occurrence, r * fm.n_qubits + q);
        }
    }
    for (auto &g : grad) {
        g *= fm.scale;
    }
    return grad;
}

/// dp0/dtheta by the two-point shift on each ansatz angle.
inline std::vector<double> theta_gradients(const HybridModel &model, std::span<const double> angles) {
    std::vector<double> theta(model.theta_span().begin(), model.theta_span().end());
    auto eval = [&](const std::vector<double> &t) {
        return quantum_forward(angles, t, model.feature_map, model.ansatz, model.readout_qubit).p0;
    };
    std::vector<double> grad(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        grad[i] = param_shift_grad(eval, theta, i);
    }
    return grad;
}

/// Gradients of the sample loss for every trainable matrix, in for_each_parameter order.
/// Encoder gradients are skipped when `include_encoder` is false.
inline Gradients backward(const HybridModel &model, const ForwardCache &cache, bool include_encoder = true) {
    if (!cache.valid) {
        throw StateError("backward called without a forward pass");
    }
    if (model.use_encoder && !cache.encoder) {
        throw StateError("forward cache lacks encoder intermediates");
    }
    const double dl_dp0 = bce_grad_p0(cache.p0, cache.label);

    Mat dtheta(1, model.theta.cols());
    auto tg = theta_gradients(model, cache.angles);
    for (std::size_t i = 0; i < tg.size(); ++i) {
        dtheta(0, static_cast<Eigen::Index>(i)) = dl_dp0 * tg[i];
    }

    auto fg = feature_gradients(model, cache.angles);
    RowVec dl_dy(static_cast<Eigen::Index>(fg.size()));
    for (std::size_t j = 0; j < fg.size(); ++j) {
        dl_dy(static_cast<Eigen::Index>(j)) = dl_dp0 * fg[j];
    }

    const auto in_dim = static_cast<Eigen::Index>(cache.embedding.size());
    Mat dw(in_dim, dl_dy.cols());
    for (Eigen::Index i = 0; i < in_dim; ++i) {
        for (Eigen::Index j = 0; j < dl_dy.cols(); ++j) {
            dw(i, j) = dl_dy(j) * cache.embedding[static_cast<std::size_t>(i)];
        }
    }

    Gradients out;
    if (model.use_encoder) {
        EncoderWeights ge;
        if (include_encoder) {
            RowVec d_embed = dl_dy * model.reduction.w.transpose();
            ge = encoder_backward(*cache.encoder, model.encoder, model.encoder_config, d_embed);
        } else {
            ge = zeros_like(model.encoder);
        }
        for_each_encoder_parameter(ge, [&](const std::string &name, Mat &m) { out.push_back({name, std::move(m)}); });
    }
    out.push_back({"reduce.w", std::move(dw)});
    out.push_back({"reduce.b", Mat(dl_dy)});
    out.push_back({"ansatz.theta", std::move(dtheta)});
    return out;
}

/// Euclidean norm over every entry of every record.
inline double gradient_norm(const Gradients &g) {
    double s = 0.0;
    for (const auto &r : g) {
        s += r.value.squaredNorm();
    }
    return std::sqrt(s);
}

}  // namespace qembed

#endif  // QEMBED_MODEL_HPP_
