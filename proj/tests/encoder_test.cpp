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

#include "qembed/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gtest/gtest.h"

#include "oracles.hpp"

using namespace qembed;

namespace {

ImageTensor ramp_image(std::size_t h, std::size_t w, std::size_t c) {
    ImageTensor img{h, w, c, std::vector<double>(h * w * c)};
    std::iota(img.data.begin(), img.data.end(), 0.0);
    return img;
}

ImageTensor random_image(const EncoderConfig &cfg, std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ImageTensor img{cfg.image_height, cfg.image_width, cfg.channels, std::vector<double>(cfg.input_dim())};
    for (auto &v : img.data) {
        v = u(rng);
    }
    return img;
}

EncoderConfig toy_config() {
    EncoderConfig cfg;
    cfg.image_height = 4;
    cfg.image_width = 4;
    cfg.channels = 1;
    cfg.patch_size = 2;
    cfg.embed_dim = 8;
    cfg.layers = 2;
    cfg.heads = 2;
    cfg.ffn_hidden = 16;
    cfg.out_dim = 16;
    return cfg;
}

}  // namespace

TEST(tokenize, patch_layout_4x4) {
    auto img = ramp_image(4, 4, 1);
    Mat p = extract_patches(img, 2);
    ASSERT_EQ(p.rows(), 4);
    ASSERT_EQ(p.cols(), 4);
    // Patch 0 covers rows 0-1, cols 0-1: pixel values 0, 1, 4, 5.
    EXPECT_EQ(p(0, 0), 0.0);
    EXPECT_EQ(p(0, 1), 1.0);
    EXPECT_EQ(p(0, 2), 4.0);
    EXPECT_EQ(p(0, 3), 5.0);
    EXPECT_EQ(p(3, 0), 10.0);
}

TEST(tokenize, identity_projection_copies_patches) {
    EncoderConfig cfg = toy_config();
    cfg.embed_dim = 4;
    cfg.heads = 1;
    cfg.use_class_token = false;
    std::mt19937_64 rng(1);
    auto w = init_encoder_weights(cfg, rng);
    w.patch_proj = Mat::Identity(4, 4);
    auto img = ramp_image(4, 4, 1);
    Mat tokens = tokenize(img, w, cfg);
    EXPECT_EQ(tokens, extract_patches(img, 2));
}

TEST(tokenize, class_token_prepended) {
    EncoderConfig cfg = toy_config();
    std::mt19937_64 rng(2);
    auto w = init_encoder_weights(cfg, rng);
    Mat tokens = tokenize(ramp_image(4, 4, 1), w, cfg);
    ASSERT_EQ(tokens.rows(), 5);
    EXPECT_EQ(Mat(tokens.row(0)), w.cls_token);
}

TEST(tokenize, patch_order_6x4_by_enumeration) {
    ImageTensor img{6, 4, 2, std::vector<double>(6 * 4 * 2)};
    std::iota(img.data.begin(), img.data.end(), 0.0);
    Mat p = extract_patches(img, 2);
    ASSERT_EQ(p.rows(), 6);
    const std::vector<std::pair<std::size_t, std::size_t>> order = {{0, 0}, {0, 1}, {1, 0}, {1, 1}, {2, 0}, {2, 1}};
    for (std::size_t k = 0; k < order.size(); ++k) {
        std::size_t col = 0;
        for (std::size_t r = 0; r < 2; ++r) {
            for (std::size_t c = 0; c < 2; ++c) {
                for (std::size_t ch = 0; ch < 2; ++ch) {
                    EXPECT_EQ(p(k, col++), img.at(order[k].first * 2 + r, order[k].second * 2 + c, ch));
                }
            }
        }
    }
}

TEST(tokenize, rejects_non_divisible) {
    EXPECT_THROW(extract_patches(ramp_image(5, 4, 1), 2), ShapeError);
    EncoderConfig cfg = toy_config();
    cfg.image_height = 5;
    EXPECT_THROW(cfg.validate(), ShapeError);
    cfg = toy_config();
    cfg.heads = 3;
    EXPECT_THROW(cfg.validate(), ShapeError);
}

TEST(add_positional, examples) {
    std::mt19937_64 rng(3);
    EncoderWeights w;
    Mat x = oracle::random_matrix(5, 8, rng);
    w.positional = Mat::Zero(5, 8);
    EXPECT_EQ(add_positional(x, w), x);
    w.positional = oracle::random_matrix(5, 8, rng);
    EXPECT_EQ(add_positional(Mat::Zero(5, 8), w), w.positional);
    Mat sum = add_positional(x, w);
    for (Eigen::Index i = 0; i < 5; ++i) {
        for (Eigen::Index j = 0; j < 8; ++j) {
            EXPECT_EQ(sum(i, j), x(i, j) + w.positional(i, j));
        }
    }
    w.positional = Mat::Zero(4, 8);
    EXPECT_THROW(add_positional(x, w), ShapeError);
}

TEST(self_attention, single_token) {
    std::mt19937_64 rng(4);
    auto lw = oracle::random_layer(4, 6, rng);
    Mat x = oracle::random_matrix(1, 4, rng);
    Mat out = self_attention(x, lw, 2);
    Mat expected = (x * lw.wv) * lw.wo;
    EXPECT_LT((out - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(self_attention, identical_tokens_uniform_weights) {
    std::mt19937_64 rng(5);
    auto lw = oracle::random_layer(4, 6, rng);
    Mat row = oracle::random_matrix(1, 4, rng);
    Mat x(2, 4);
    x << row, row;
    for (const auto &a : attention_weights(x, lw, 2)) {
        for (Eigen::Index i = 0; i < 2; ++i) {
            EXPECT_NEAR(a(i, 0), 0.5, 1e-15);
            EXPECT_NEAR(a(i, 1), 0.5, 1e-15);
        }
    }
}

TEST(self_attention, matches_loop_oracle) {
    std::mt19937_64 rng(6);
    for (std::size_t heads : {1u, 2u, 4u}) {
        auto lw = oracle::random_layer(8, 6, rng);
        Mat x = oracle::random_matrix(3, 8, rng);
        Mat out = self_attention(x, lw, heads);
        EXPECT_LT(oracle::max_abs_diff(out, oracle::attention(oracle::to_rows(x), lw, heads)), 1e-10);
    }
}

TEST(ffn, examples) {
    std::mt19937_64 rng(7);
    auto lw = oracle::random_layer(4, 6, rng);
    Mat x = oracle::random_matrix(1, 4, rng);

    auto zeroed = lw;
    zeroed.w1.setZero();
    zeroed.b1.setZero();
    EXPECT_EQ(ffn(x, zeroed), lw.b2);

    auto dead = lw;
    dead.w1 = -lw.w1.cwiseAbs();
    dead.b1 = -Mat::Ones(1, 6);
    Mat positive = x.cwiseAbs();
    EXPECT_EQ(ffn(positive, dead), lw.b2);

    Mat out = ffn(x, lw);
    auto ref = oracle::ffn_row(oracle::to_rows(x)[0], lw);
    for (std::size_t j = 0; j < ref.size(); ++j) {
        EXPECT_NEAR(out(0, j), ref[j], 1e-12);
    }
}

TEST(layer_norm, normalised_rows) {
    std::mt19937_64 rng(8);
    Mat x = oracle::random_matrix(6, 8, rng, 3.0);
    LayerNormCache c;
    layer_norm(x, Mat::Ones(1, 8), Mat::Zero(1, 8), &c);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double mean = x.row(i).mean();
        const double var = (x.row(i).array() - mean).square().mean();
        const double m = c.normalized.row(i).mean();
        const double v = (c.normalized.row(i).array() - m).square().mean();
        EXPECT_NEAR(m, 0.0, 1e-9);
        EXPECT_NEAR(v, var / (var + kLayerNormEps), 1e-9);
    }
    // Once the row variance dominates eps the normalised variance is 1 within 1e-9.
    Mat wide = x * 1e3;
    layer_norm(wide, Mat::Ones(1, 8), Mat::Zero(1, 8), &c);
    for (Eigen::Index i = 0; i < wide.rows(); ++i) {
        const double m = c.normalized.row(i).mean();
        EXPECT_NEAR(m, 0.0, 1e-9);
        EXPECT_NEAR((c.normalized.row(i).array() - m).square().mean(), 1.0, 1e-9);
    }
}

TEST(encoder_layer, zero_sublayers_reduce_to_double_layer_norm) {
    std::mt19937_64 rng(9);
    auto lw = oracle::random_layer(8, 6, rng);
    for (Mat *m : {&lw.wq, &lw.wk, &lw.wv, &lw.wo, &lw.w1, &lw.b1, &lw.w2, &lw.b2, &lw.ln1_bias, &lw.ln2_bias}) {
        m->setZero();
    }
    lw.ln1_gain.setOnes();
    lw.ln2_gain.setOnes();
    Mat x = oracle::random_matrix(4, 8, rng);
    Mat g = Mat::Ones(1, 8), b = Mat::Zero(1, 8);
    Mat expected = layer_norm(layer_norm(x, g, b), g, b);
    EXPECT_LT((encoder_layer(x, lw, 2) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(encoder_layer, matches_composed_oracle) {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 10; ++trial) {
        auto lw = oracle::random_layer(8, 12, rng);
        Mat x = oracle::random_matrix(5, 8, rng);
        Mat out = encoder_layer(x, lw, 2);
        EXPECT_LT(oracle::max_abs_diff(out, oracle::encoder_layer(oracle::to_rows(x), lw, 2)), 1e-10);
    }
}

TEST(encode, empty_stack_returns_first_token) {
    EncoderConfig cfg = toy_config();
    cfg.layers = 0;
    cfg.out_dim = cfg.embed_dim;
    std::mt19937_64 rng(11);
    auto w = init_encoder_weights(cfg, rng);
    w.head_w = Mat::Identity(8, 8);
    auto img = random_image(cfg, rng);
    Mat x = add_positional(tokenize(img, w, cfg), w);
    RowVec out = encode(img, w, cfg);
    EXPECT_LT((out - x.row(0)).cwiseAbs().maxCoeff(), 1e-15);

    cfg.use_class_token = false;
    w = init_encoder_weights(cfg, rng);
    w.head_w = Mat::Identity(8, 8);
    x = add_positional(tokenize(img, w, cfg), w);
    EXPECT_LT((encode(img, w, cfg) - x.row(0)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(encode, output_length_follows_out_dim) {
    EncoderConfig cfg = toy_config();
    cfg.out_dim = 3;
    std::mt19937_64 rng(12);
    auto w = init_encoder_weights(cfg, rng);
    EXPECT_EQ(encode(random_image(cfg, rng), w, cfg).size(), 3);
}

TEST(encode, regression_anchor_all_ones_image) {
    EncoderConfig cfg = toy_config();
    std::mt19937_64 rng(42);
    auto w = init_encoder_weights(cfg, rng);
    ImageTensor ones{4, 4, 1, std::vector<double>(16, 1.0)};
    RowVec out = encode(ones, w, cfg);
    // Snapshot of this implementation's own output (libstdc++ RNG streams).
    const std::vector<double> expected = {
        1.1085447088986518, 1.1425812986389687, -0.8262667295430722, -1.3880779916390842,
        -1.5629913939572375, -0.6091821220657763, 0.820347231881913, -0.1425381925796091,
        -1.4935873621149556, -0.14318092312564182, -0.4396463749417549, -0.20879798078363596,
        0.637831731526929, -1.027227539343399, 0.6508498914239451, -0.18208912898228613};
    ASSERT_EQ(static_cast<std::size_t>(out.size()), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        EXPECT_NEAR(out(i), expected[i], 1e-12) << i;
    }
}

TEST(encode, deterministic_and_finite) {
    EncoderConfig cfg = toy_config();
    std::mt19937_64 rng(13);
    auto w = init_encoder_weights(cfg, rng);
    for (int trial = 0; trial < 20; ++trial) {
        auto img = random_image(cfg, rng);
        RowVec a = encode(img, w, cfg);
        RowVec b = encode(img, w, cfg);
        EXPECT_TRUE(a.allFinite());
        EXPECT_EQ(a, b);
        EXPECT_EQ(a, encode_with_cache(img, w, cfg).output);
    }
}

TEST(attention_invariants, rows_are_distributions) {
    std::mt19937_64 rng(14);
    EncoderConfig cfg = toy_config();
    for (int trial = 0; trial < 100; ++trial) {
        const auto lw = init_encoder_weights(cfg, rng).layers[0];
        Mat x = oracle::random_matrix(1 + trial % 6, 8, rng);
        for (const auto &a : attention_weights(x, lw, 1 + trial % 2)) {
            for (Eigen::Index i = 0; i < a.rows(); ++i) {
                EXPECT_NEAR(a.row(i).sum(), 1.0, 1e-9);
                EXPECT_GT(a.row(i).minCoeff(), 0.0);
                if (a.cols() > 1) {
                    EXPECT_LT(a.row(i).maxCoeff(), 1.0);
                }
            }
        }
    }
}

TEST(attention_invariants, identical_keys_ignore_temperature) {
    std::mt19937_64 rng(15);
    auto lw = oracle::random_layer(4, 4, rng);
    Mat row = oracle::random_matrix(1, 4, rng);
    Mat x = row.replicate(3, 1);
    for (double t : {1e-3, 1.0, 1e3}) {
        auto hot = lw;
        hot.wq *= t;
        for (const auto &a : attention_weights(x, hot, 2)) {
            EXPECT_LT((a.array() - 1.0 / 3.0).abs().maxCoeff(), 1e-12);
        }
    }
}

TEST(attention_invariants, permutation_equivariance) {
    std::mt19937_64 rng(16);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<LayerWeights> layers = {oracle::random_layer(8, 12, rng), oracle::random_layer(8, 12, rng)};
        Mat x = oracle::random_matrix(4, 8, rng);
        std::vector<int> perm = {0, 1, 2, 3};
        std::shuffle(perm.begin(), perm.end(), rng);
        Mat px(4, 8);
        for (int i = 0; i < 4; ++i) {
            px.row(i) = x.row(perm[i]);
        }
        Mat a = x, b = px;
        for (const auto &lw : layers) {
            a = encoder_layer(a, lw, 2);
            b = encoder_layer(b, lw, 2);
        }
        for (int i = 0; i < 4; ++i) {
            EXPECT_LT((b.row(i) - a.row(perm[i])).cwiseAbs().maxCoeff(), 1e-10);
        }
    }
}

TEST(encoder_backward, matches_finite_differences) {
    EncoderConfig cfg = toy_config();
    std::mt19937_64 rng(17);
    auto w = init_encoder_weights(cfg, rng);
    // Move gains and biases off their init values so every path is exercised.
    for (auto &lw : w.layers) {
        lw.ln1_gain = (oracle::random_matrix(1, 8, rng, 0.2).array() + 1.0).matrix();
        lw.ln2_bias = oracle::random_matrix(1, 8, rng, 0.2);
        lw.b1 = oracle::random_matrix(1, 16, rng, 0.2);
    }
    auto img = random_image(cfg, rng);
    RowVec r = oracle::random_matrix(1, cfg.out_dim, rng);
    auto g = encoder_backward(encode_with_cache(img, w, cfg), w, cfg, r);

    auto probe = w;
    std::vector<Mat *> targets;
    for_each_encoder_parameter(probe, [&](const std::string &, Mat &m) { targets.push_back(&m); });
    std::vector<const Mat *> grads;
    for_each_encoder_parameter(g, [&](const std::string &, Mat &m) { grads.push_back(&m); });
    ASSERT_EQ(targets.size(), grads.size());
    const double h = 1e-5;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        for (Eigen::Index e = 0; e < targets[t]->size(); ++e) {
            double &slot = targets[t]->data()[e];
            const double orig = slot;
            slot = orig + h;
            const double up = encode(img, probe, cfg).dot(r);
            slot = orig - h;
            const double down = encode(img, probe, cfg).dot(r);
            slot = orig;
            const double fd = (up - down) / (2 * h);
            const double an = grads[t]->data()[e];
            ASSERT_LE(std::abs(an - fd), std::max(1e-8, 1e-5 * std::abs(fd))) << "param " << t << " entry " << e;
        }
    }
}
