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

#ifndef QEMBED_ENCODER_HPP_
#define QEMBED_ENCODER_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qembed/error.hpp"
#include "qembed/linalg.hpp"

namespace qembed {

inline constexpr double kLayerNormEps = 1e-5;

/// H x W x C image, row-major over (row, column, channel).
struct ImageTensor {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    std::vector<double> data;

    double at(std::size_t r, std::size_t c, std::size_t ch) const {
        return data[(r * width + c) * channels + ch];
    }
};

/// Toy vision-transformer hyperparameters. The image geometry is part of the config
/// because the positional table is sized by the patch count.
struct EncoderConfig {
    std::size_t image_height = 4;
    std::size_t image_width = 4;
    std::size_t channels = 1;
    std::size_t patch_size = 2;
    std::size_t embed_dim = 8;
    std::size_t layers = 2;
    std::size_t heads = 2;
    std::size_t ffn_hidden = 16;
    std::size_t out_dim = 16;
    bool use_class_token = true;

    std::size_t num_patches() const {
        return (image_height / patch_size) * (image_width / patch_size);
    }
    std::size_t num_tokens() const {
        return num_patches() + (use_class_token ? 1 : 0);
    }
    std::size_t patch_dim() const {
        return patch_size * patch_size * channels;
    }
    std::size_t input_dim() const {
        return image_height * image_width * channels;
    }

    void validate() const {
        if (patch_size == 0 || embed_dim == 0 || heads == 0 || ffn_hidden == 0 || out_dim == 0 || channels == 0 ||
            image_height == 0 || image_width == 0) {
            throw ShapeError("encoder dimensions must be positive");
        }
        if (image_height % patch_size != 0 || image_width % patch_size != 0) {
            throw ShapeError("image " + std::to_string(image_height) + "x" + std::to_string(image_width) +
                             " is not divisible by patch size " + std::to_string(patch_size));
        }
        if (embed_dim % heads != 0) {
            throw ShapeError("embed_dim must be divisible by heads");
        }
    }
};

struct LayerWeights {
    Mat wq, wk, wv, wo;  // D x D
    Mat w1, b1;          // D x F, 1 x F
    Mat w2, b2;          // F x D, 1 x D
    Mat ln1_gain, ln1_bias;
    Mat ln2_gain, ln2_bias;
};

struct EncoderWeights {
    Mat patch_proj;  // N^2 C x D
    Mat cls_token;   // 1 x D, or 0 x D when the class token is disabled
    Mat positional;  // T x D
    std::vector<LayerWeights> layers;
    Mat head_w;  // D x out_dim
    Mat head_b;  // 1 x out_dim
};

/// Calls f(name, matrix) for every trainable matrix in canonical order.
template <typename W, typename F>
void for_each_encoder_parameter(W &w, F &&f) {
    f(std::string("encoder.patch_proj"), w.patch_proj);
    if (w.cls_token.rows() > 0) {
        f(std::string("encoder.cls_token"), w.cls_token);
    }
    f(std::string("encoder.pos"), w.positional);
    for (std::size_t l = 0; l < w.layers.size(); ++l) {
        auto &lw = w.layers[l];
        const std::string p = "layer." + std::to_string(l) + ".";
        f(p + "attn.wq", lw.wq);
        f(p + "attn.wk", lw.wk);
        f(p + "attn.wv", lw.wv);
        f(p + "attn.wo", lw.wo);
        f(p + "ffn.w1", lw.w1);
        f(p + "ffn.b1", lw.b1);
        f(p + "ffn.w2", lw.w2);
        f(p + "ffn.b2", lw.b2);
        f(p + "ln1.gain", lw.ln1_gain);
        f(p + "ln1.bias", lw.ln1_bias);
        f(p + "ln2.gain", lw.ln2_gain);
        f(p + "ln2.bias", lw.ln2_bias);
    }
    f(std::string("head.w"), w.head_w);
    f(std::string("head.b"), w.head_b);
}

/// Same shapes as `w`, all zero.
inline EncoderWeights zeros_like(const EncoderWeights &w) {
    EncoderWeights z = w;
    for_each_encoder_parameter(z, [](const std::string &, Mat &m) { m.setZero(); });
    return z;
}

/// Projections Glorot-uniform, biases 0, layer-norm gain 1 / bias 0,
/// positional table and class token N(0, 0.02).
inline EncoderWeights init_encoder_weights(const EncoderConfig &cfg, std::mt19937_64 &rng) {
    cfg.validate();
    const std::size_t d = cfg.embed_dim;
    EncoderWeights w;
    w.patch_proj = xavier_uniform(cfg.patch_dim(), d, rng);
    w.cls_token = cfg.use_class_token ? normal_fill(1, d, 0.02, rng) : Mat(0, d);
    w.positional = normal_fill(cfg.num_tokens(), d, 0.02, rng);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        LayerWeights lw;
        lw.wq = xavier_uniform(d, d, rng);
        lw.wk = xavier_uniform(d, d, rng);
        lw.wv = xavier_uniform(d, d, rng);
        lw.wo = xavier_uniform(d, d, rng);
        lw.w1 = xavier_uniform(d, cfg.ffn_hidden, rng);
        lw.b1 = Mat::Zero(1, cfg.ffn_hidden);
        lw.w2 = xavier_uniform(cfg.ffn_hidden, d, rng);
        lw.b2 = Mat::Zero(1, d);
        lw.ln1_gain = Mat::Ones(1, d);
        lw.ln1_bias = Mat::Zero(1, d);
        lw.ln2_gain = Mat::Ones(1, d);
        lw.ln2_bias = Mat::Zero(1, d);
        w.layers.push_back(std::move(lw));
    }
    w.head_w = xavier_uniform(d, cfg.out_dim, rng);
    w.head_b = Mat::Zero(1, cfg.out_dim);
    return w;
}

/// Throws ShapeError unless every matrix matches `cfg`.
inline void validate_encoder_weights(const EncoderWeights &w, const EncoderConfig &cfg) {
    cfg.validate();
    const auto d = static_cast<Eigen::Index>(cfg.embed_dim);
    const auto f = static_cast<Eigen::Index>(cfg.ffn_hidden);
    auto check = [](const Mat &m, Eigen::Index r, Eigen::Index c, const char *what) {
        if (m.rows() != r || m.cols() != c) {
            throw ShapeError(std::string(what) + ": expected " + std::to_string(r) + "x" + std::to_string(c) +
                             ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
        }
        if (!m.allFinite()) {
            throw NumericalError(std::string(what) + " contains non-finite values");
        }
    };
    check(w.patch_proj, static_cast<Eigen::Index>(cfg.patch_dim()), d, "patch projection");
    check(w.cls_token, cfg.use_class_token ? 1 : 0, d, "class token");
    check(w.positional, static_cast<Eigen::Index>(cfg.num_tokens()), d, "positional table");
    if (w.layers.size() != cfg.layers) {
        throw ShapeError("layer count mismatch");
    }
    for (const auto &lw : w.layers) {
        check(lw.wq, d, d, "wq");
        check(lw.wk, d, d, "wk");
        check(lw.wv, d, d, "wv");
        check(lw.wo, d, d, "wo");
        check(lw.w1, d, f, "ffn w1");
        check(lw.b1, 1, f, "ffn b1");
        check(lw.w2, f, d, "ffn w2");
        check(lw.b2, 1, d, "ffn b2");
        check(lw.ln1_gain, 1, d, "ln1 gain");
        check(lw.ln1_bias, 1, d, "ln1 bias");
        check(lw.ln2_gain, 1, d, "ln2 gain");
        check(lw.ln2_bias, 1, d, "ln2 bias");
    }
    check(w.head_w, d, static_cast<Eigen::Index>(cfg.out_dim), "head weight");
    check(w.head_b, 1, static_cast<Eigen::Index>(cfg.out_dim), "head bias");
}

inline ImageTensor image_from_flat(std::span<const double> flat, const EncoderConfig &cfg) {
    if (flat.size() != cfg.input_dim()) {
        throw ShapeError("image expects " + std::to_string(cfg.input_dim()) + " values, got " +
                         std::to_string(flat.size()));
    }
    return {cfg.image_height, cfg.image_width, cfg.channels, std::vector<double>(flat.begin(), flat.end())};
}

/// Non-overlapping N x N patches in row-major patch-grid order, each flattened
/// row-major over (row, column, channel). Result is num_patches x N^2 C.
inline Mat extract_patches(const ImageTensor &image, std::size_t patch_size) {
    if (patch_size == 0 || image.height % patch_size != 0 || image.width % patch_size != 0) {
        throw ShapeError("image " + std::to_string(image.height) + "x" + std::to_string(image.width) +
                         " is not divisible by patch size " + std::to_string(patch_size));
    }
    if (image.data.size() != image.height * image.width * image.channels) {
        throw ShapeError("image data length does not match H x W x C");
    }
    const std::size_t grid_r = image.height / patch_size;
    const std::size_t grid_c = image.width / patch_size;
    const std::size_t n = patch_size;
    Mat patches(grid_r * grid_c, n * n * image.channels);
    for (std::size_t pr = 0; pr < grid_r; ++pr) {
        for (std::size_t pc = 0; pc < grid_c; ++pc) {
            const std::size_t row = pr * grid_c + pc;
            std::size_t k = 0;
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t c = 0; c < n; ++c) {
                    for (std::size_t ch = 0; ch < image.channels; ++ch) {
                        patches(row, k++) = image.at(pr * n + r, pc * n + c, ch);
                    }
                }
            }
        }
    }
    return patches;
}

/// Patch embeddings, with the class token prepended when enabled. T x D.
inline Mat tokenize(const ImageTensor &image, const EncoderWeights &w, const EncoderConfig &cfg) {
    if (image.height != cfg.image_height || image.width != cfg.image_width || image.channels != cfg.channels) {
        throw ShapeError("image geometry does not match encoder config");
    }
    Mat xp = extract_patches(image, cfg.patch_size) * w.patch_proj;
    if (!cfg.use_class_token) {
        return xp;
    }
    Mat tokens(xp.rows() + 1, xp.cols());
    tokens.row(0) = w.cls_token.row(0);
    tokens.bottomRows(xp.rows()) = xp;
    return tokens;
}

inline Mat add_positional(const Mat &tokens, const EncoderWeights &w) {
    if (tokens.rows() != w.positional.rows() || tokens.cols() != w.positional.cols()) {
        throw ShapeError("positional table shape does not match token sequence");
    }
    return tokens + w.positional;
}

inline void softmax_rows(Mat &m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double mx = m.row(i).maxCoeff();
        m.row(i) = (m.row(i).array() - mx).exp().matrix();
        m.row(i) /= m.row(i).sum();
    }
}

struct AttentionCache {
    Mat q, k, v;
    std::vector<Mat> weights;  // per head, T x T
    Mat concat;
};

/// Softmax(Q_h K_h^T / sqrt(d_k)) V_h per head, heads concatenated, then output-projected.
inline Mat self_attention(const Mat &x, const LayerWeights &lw, std::size_t heads, AttentionCache *cache = nullptr) {
    const auto d = x.cols();
    if (heads == 0 || d % static_cast<Eigen::Index>(heads) != 0) {
        throw ShapeError("embed_dim must be divisible by heads");
    }
    const auto dk = d / static_cast<Eigen::Index>(heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    Mat q = x * lw.wq;
    Mat k = x * lw.wk;
    Mat v = x * lw.wv;
    Mat concat(x.rows(), d);
    std::vector<Mat> weights;
    for (std::size_t h = 0; h < heads; ++h) {
        const auto off = static_cast<Eigen::Index>(h) * dk;
        Mat a = (q.middleCols(off, dk) * k.middleCols(off, dk).transpose()) * scale;
        softmax_rows(a);
        concat.middleCols(off, dk) = a * v.middleCols(off, dk);
        if (cache) {
            weights.push_back(std::move(a));
        }
    }
    Mat out = concat * lw.wo;
    if (cache) {
        *cache = {std::move(q), std::move(k), std::move(v), std::move(weights), std::move(concat)};
    }
    return out;
}

/// Per-head attention weight matrices for inspection.
inline std::vector<Mat> attention_weights(const Mat &x, const LayerWeights &lw, std::size_t heads) {
    AttentionCache cache;
    self_attention(x, lw, heads, &cache);
    return std::move(cache.weights);
}

struct FfnCache {
    Mat pre;  // x W1 + b1
    Mat hidden;
};

/// max(0, x W1 + b1) W2 + b2 applied to each row of `x`.
inline Mat ffn(const Mat &x, const LayerWeights &lw, FfnCache *cache = nullptr) {
    Mat pre = x * lw.w1;
    pre.rowwise() += lw.b1.row(0);
    Mat hidden = pre.cwiseMax(0.0);
    Mat out = hidden * lw.w2;
    out.rowwise() += lw.b2.row(0);
    if (cache) {
        *cache = {std::move(pre), std::move(hidden)};
    }
    return out;
}

struct LayerNormCache {
    Mat normalized;  // (x - mean) / sqrt(var + eps), before gain and bias
    Eigen::VectorXd inv_std;
};

/// Row-wise layer normalisation over the feature dimension (population variance).
inline Mat layer_norm(const Mat &x, const Mat &gain, const Mat &bias, LayerNormCache *cache = nullptr) {
    const auto n = static_cast<double>(x.cols());
    Mat xhat(x.rows(), x.cols());
    Eigen::VectorXd inv_std(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double mean = x.row(i).sum() / n;
        const auto centered = (x.row(i).array() - mean).eval();
        const double var = centered.square().sum() / n;
        inv_std(i) = 1.0 / std::sqrt(var + kLayerNormEps);
        xhat.row(i) = (centered * inv_std(i)).matrix();
    }
    Mat out = xhat.array().rowwise() * gain.row(0).array();
    out.rowwise() += bias.row(0);
    if (cache) {
        *cache = {std::move(xhat), std::move(inv_std)};
    }
    return out;
}

struct EncoderLayerCache {
    Mat input;
    AttentionCache attn;
    LayerNormCache ln1;
    Mat u;
    FfnCache ffn;
    LayerNormCache ln2;
};

/// Post-norm block: u = LN(x + SA(x)); out = LN(u + FFN(u)).
inline Mat encoder_layer(const Mat &x, const LayerWeights &lw, std::size_t heads, EncoderLayerCache *cache = nullptr) {
    AttentionCache ac;
    Mat s1 = x + self_attention(x, lw, heads, cache ? &ac : nullptr);
    LayerNormCache l1;
    Mat u = layer_norm(s1, lw.ln1_gain, lw.ln1_bias, cache ? &l1 : nullptr);
    FfnCache fc;
    Mat s2 = u + ffn(u, lw, cache ? &fc : nullptr);
    LayerNormCache l2;
    Mat out = layer_norm(s2, lw.ln2_gain, lw.ln2_bias, cache ? &l2 : nullptr);
    if (cache) {
        *cache = {x, std::move(ac), std::move(l1), std::move(u), std::move(fc), std::move(l2)};
    }
    return out;
}

struct EncoderCache {
    Mat patches;
    std::vector<EncoderLayerCache> layers;
    Mat final_tokens;
    RowVec output;
};

/// Runs the full stack and keeps every intermediate needed by encoder_backward.
inline EncoderCache encode_with_cache(const ImageTensor &image, const EncoderWeights &w, const EncoderConfig &cfg) {
    EncoderCache cache;
    Mat x = add_positional(tokenize(image, w, cfg), w);
    cache.patches = extract_patches(image, cfg.patch_size);
    cache.layers.resize(w.layers.size());
    for (std::size_t l = 0; l < w.layers.size(); ++l) {
        x = encoder_layer(x, w.layers[l], cfg.heads, &cache.layers[l]);
    }
    cache.output = x.row(0) * w.head_w + w.head_b.row(0);
    cache.final_tokens = std::move(x);
    return cache;
}

/// Head applied to token 0 of the last layer: the class token, or patch 0 when disabled.
inline RowVec encode(const ImageTensor &image, const EncoderWeights &w, const EncoderConfig &cfg) {
    Mat x = add_positional(tokenize(image, w, cfg), w);
    for (const auto &lw : w.layers) {
        x = encoder_layer(x, lw, cfg.heads);
    }
    return x.row(0) * w.head_w + w.head_b.row(0);
}

namespace detail {

inline Mat layer_norm_backward(const Mat &dy, const Mat &gain, const LayerNormCache &c, Mat &dgain, Mat &dbias) {
    const Mat &xhat = c.normalized;
    dgain += (dy.array() * xhat.array()).colwise().sum().matrix();
    dbias += dy.colwise().sum();
    Mat dxhat = dy.array().rowwise() * gain.row(0).array();
    const auto n = static_cast<double>(dy.cols());
    Mat dx(dy.rows(), dy.cols());
    for (Eigen::Index i = 0; i < dy.rows(); ++i) {
        const double mean_d = dxhat.row(i).sum() / n;
        const double mean_dx = dxhat.row(i).dot(xhat.row(i)) / n;
        dx.row(i) = c.inv_std(i) * (dxhat.row(i).array() - mean_d - xhat.row(i).array() * mean_dx).matrix();
    }
    return dx;
}

inline Mat ffn_backward(const Mat &x, const Mat &dout, const LayerWeights &lw, const FfnCache &c, LayerWeights &g) {
    g.w2 += c.hidden.transpose() * dout;
    g.b2 += dout.colwise().sum();
    Mat dpre = ((dout * lw.w2.transpose()).array() * (c.pre.array() > 0.0).cast<double>()).matrix();
    g.w1 += x.transpose() * dpre;
    g.b1 += dpre.colwise().sum();
    return dpre * lw.w1.transpose();
}

inline Mat attention_backward(const Mat &x, const Mat &dout, const LayerWeights &lw, std::size_t heads,
                              const AttentionCache &c, LayerWeights &g) {
    const auto d = x.cols();
    const auto dk = d / static_cast<Eigen::Index>(heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    g.wo += c.concat.transpose() * dout;
    Mat dconcat = dout * lw.wo.transpose();
    Mat dq(x.rows(), d), dkm(x.rows(), d), dv(x.rows(), d);
    for (std::size_t h = 0; h < heads; ++h) {
        const auto off = static_cast<Eigen::Index>(h) * dk;
        const Mat &a = c.weights[h];
        Mat doh = dconcat.middleCols(off, dk);
        Mat da = doh * c.v.middleCols(off, dk).transpose();
        dv.middleCols(off, dk) = a.transpose() * doh;
        Eigen::VectorXd row_dot = (da.array() * a.array()).rowwise().sum();
        Mat ds = (a.array() * (da.array().colwise() - row_dot.array())).matrix() * scale;
        dq.middleCols(off, dk) = ds * c.k.middleCols(off, dk);
        dkm.middleCols(off, dk) = ds.transpose() * c.q.middleCols(off, dk);
    }
    g.wq += x.transpose() * dq;
    g.wk += x.transpose() * dkm;
    g.wv += x.transpose() * dv;
    return dq * lw.wq.transpose() + dkm * lw.wk.transpose() + dv * lw.wv.transpose();
}

inline Mat encoder_layer_backward(const Mat &dout, const LayerWeights &lw, std::size_t heads,
                                  const EncoderLayerCache &c, LayerWeights &g) {
    Mat ds2 = layer_norm_backward(dout, lw.ln2_gain, c.ln2, g.ln2_gain, g.ln2_bias);
    Mat du = ds2 + ffn_backward(c.u, ds2, lw, c.ffn, g);
    Mat ds1 = layer_norm_backward(du, lw.ln1_gain, c.ln1, g.ln1_gain, g.ln1_bias);
    return ds1 + attention_backward(c.input, ds1, lw, heads, c.attn, g);
}

}  // namespace detail

/// Reverse-mode gradient of <d_output, encode(image)> with respect to every encoder
/// weight. `d_output` is 1 x out_dim.
inline EncoderWeights encoder_backward(const EncoderCache &cache, const EncoderWeights &w, const EncoderConfig &cfg,
                                       const RowVec &d_output) {
    if (d_output.cols() != w.head_w.cols()) {
        throw ShapeError("output gradient length does not match encoder out_dim");
    }
    if (cache.layers.size() != w.layers.size() || cache.final_tokens.rows() == 0) {
        throw StateError("encoder cache does not belong to these weights");
    }
    EncoderWeights g = zeros_like(w);
    g.head_w = cache.final_tokens.row(0).transpose() * d_output;
    g.head_b = d_output;
    Mat dx = Mat::Zero(cache.final_tokens.rows(), cache.final_tokens.cols());
    dx.row(0) = d_output * w.head_w.transpose();
    for (std::size_t l = w.layers.size(); l-- > 0;) {
        dx = detail::encoder_layer_backward(dx, w.layers[l], cfg.heads, cache.layers[l], g.layers[l]);
    }
    g.positional = dx;
    Mat dxp = dx;
    if (cfg.use_class_token) {
        g.cls_token = dx.row(0);
        dxp = dx.bottomRows(dx.rows() - 1);
    }
    g.patch_proj = cache.patches.transpose() * dxp;
    return g;
}

}  // namespace qembed

#endif  // QEMBED_ENCODER_HPP_
