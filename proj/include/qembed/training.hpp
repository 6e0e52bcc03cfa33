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

#ifndef QEMBED_TRAINING_HPP_
#define QEMBED_TRAINING_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "qembed/data.hpp"
#include "qembed/error.hpp"
#include "qembed/metrics.hpp"
#include "qembed/model.hpp"
#include "qembed/numfmt.hpp"
#include "qembed/optimizer.hpp"

namespace qembed {

struct TrainingConfig {
    double learning_rate = 0.05;
    std::size_t max_epochs = 200;
    std::size_t batch_size = 1;
    OptimizerConfig optimizer;
    std::uint64_t seed = 0;
    /// Epochs without a min_delta improvement before stopping; 0 disables early stopping.
    std::size_t patience = 20;
    double min_delta = 1e-6;
    double validation_fraction = 0.2;
    bool freeze_encoder = false;

    void validate() const {
        if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
            throw ShapeError("learning rate must be finite and >= 0");
        }
        if (max_epochs == 0 || batch_size == 0) {
            throw ShapeError("max_epochs and batch_size must be positive");
        }
        if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
            throw ShapeError("validation fraction must be in (0, 1)");
        }
    }
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_f1 = 0.0;
    double grad_norm = 0.0;
};

struct TrainingHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double wall_seconds = 0.0;
};

struct TrainingResult {
    HybridModel model;
    TrainingHistory history;
};

struct Prediction {
    int label = 0;
    double p0 = 0.0;
    double p1 = 0.0;
};

/// label 1 iff P(0) >= 0.5; a tie goes to label 1.
inline int label_from_p0(double p0) {
    return p0 >= 0.5 ? 1 : 0;
}

inline Prediction predict(const HybridModel &model, std::span<const double> x) {
    auto q = forward_probabilities(model, x);
    return {label_from_p0(q.p0), q.p0, q.p1};
}

inline MetricsReport evaluate(const HybridModel &model, const Dataset &ds) {
    if (ds.empty()) {
        throw SizeError("cannot evaluate on an empty dataset");
    }
    std::vector<int> preds, labels;
    preds.reserve(ds.size());
    labels.reserve(ds.size());
    for (const auto &r : ds.records) {
        preds.push_back(predict(model, r.features).label);
        labels.push_back(r.label);
    }
    return compute_metrics(preds, labels);
}

inline double mean_loss(const HybridModel &model, const Dataset &ds) {
    double s = 0.0;
    for (const auto &r : ds.records) {
        s += sample_loss(model, r.features, r.label);
    }
    return s / static_cast<double>(ds.size());
}

namespace detail {

inline void check_dataset(const Dataset &ds, const HybridModel &model, const char *what) {
    if (ds.empty()) {
        throw SizeError(std::string(what) + " set is empty");
    }
    if (ds.dim != model.input_dim()) {
        throw ShapeError(std::string(what) + " set has dimension " + std::to_string(ds.dim) +
                         " but the model expects " + std::to_string(model.input_dim()));
    }
    for (const auto &r : ds.records) {
        if (r.label != 0 && r.label != 1) {
            throw ShapeError("record '" + r.id + "' has non-binary label");
        }
    }
}

}  // namespace detail

/// Mini-batch training on `train_set`, early-stopped on `validation_set`.
///
/// Every sample goes through encode, reduce, circuit, loss and backward; gradients are
/// averaged over each batch (batch_size 1 is per-sample updating). Returns the parameters
/// with the lowest validation loss seen.
inline TrainingResult train(const Dataset &train_set, const Dataset &validation_set, HybridModel model,
                            const TrainingConfig &cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    cfg.validate();
    model.validate();
    detail::check_dataset(train_set, model, "training");
    detail::check_dataset(validation_set, model, "validation");

    const bool train_encoder = model.use_encoder && !cfg.freeze_encoder;
    std::vector<Mat *> params;
    std::vector<std::size_t> grad_slot;  // index into the backward() record list
    {
        std::size_t slot = 0;
        for_each_parameter(model, [&](const std::string &name, Mat &m) {
            if (train_encoder || !is_encoder_parameter(name)) {
                params.push_back(&m);
                grad_slot.push_back(slot);
            }
            ++slot;
        });
    }

    Optimizer opt(cfg.optimizer, cfg.learning_rate);
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(train_set.size());
    std::vector<double> losses(train_set.size());

    TrainingResult result{model, {}};
    double best_loss = std::numeric_limits<double>::infinity();
    double reference_loss = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<double> batch_norms;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            Gradients accum;
            for (std::size_t k = start; k < stop; ++k) {
                const auto &rec = train_set.records[order[k]];
                auto cache = forward(model, rec.features, rec.label);
                if (!std::isfinite(cache.loss)) {
                    throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + " on record '" +
                                         rec.id + "'");
                }
                losses[order[k]] = cache.loss;
                auto g = backward(model, cache, train_encoder);
                if (accum.empty()) {
                    accum = std::move(g);
                } else {
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        accum[i].value += g[i].value;
                    }
                }
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (auto &r : accum) {
                r.value *= inv;
                if (!r.value.allFinite()) {
                    throw NumericalError("non-finite gradient for " + r.name + " at epoch " + std::to_string(epoch));
                }
            }
            std::vector<const Mat *> grads;
            double sq = 0.0;
            for (auto slot : grad_slot) {
                grads.push_back(&accum[slot].value);
                sq += accum[slot].value.squaredNorm();
            }
            batch_norms.push_back(std::sqrt(sq));
            opt.step(params, grads);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        // Index-order and sorted sums keep the record independent of the shuffle.
        rec.train_loss = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
        std::sort(batch_norms.begin(), batch_norms.end());
        rec.grad_norm = std::accumulate(batch_norms.begin(), batch_norms.end(), 0.0) /
                        static_cast<double>(batch_norms.size());
        rec.val_loss = mean_loss(model, validation_set);
        rec.val_f1 = evaluate(model, validation_set).f1;
        if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss)) {
            throw NumericalError("non-finite loss at epoch " + std::to_string(epoch));
        }
        result.history.epochs.push_back(rec);

        if (rec.val_loss < best_loss) {
            best_loss = rec.val_loss;
            result.model = model;
            result.history.best_epoch = epoch;
        }
        if (rec.val_loss < reference_loss - cfg.min_delta) {
            reference_loss = rec.val_loss;
            stale = 0;
        } else if (cfg.patience > 0 && ++stale >= cfg.patience) {
            break;
        }
    }
    result.history.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

/// Splits `dataset` by label-stratified sampling with the run seed, then trains.
inline TrainingResult train(const Dataset &dataset, HybridModel model, const TrainingConfig &cfg) {
    cfg.validate();
    if (dataset.empty()) {
        throw SizeError("training dataset is empty");
    }
    auto split = stratified_split(dataset, cfg.validation_fraction, cfg.seed);
    return train(split.train, split.validation, std::move(model), cfg);
}

/// CSV with header epoch,train_loss,val_loss,val_f1,grad_norm.
inline void write_history_csv(std::ostream &out, const TrainingHistory &h) {
    out << "epoch,train_loss,val_loss,val_f1,grad_norm\n";
    for (const auto &e : h.epochs) {
        out << e.epoch << ',' << format_real(e.train_loss) << ',' << format_real(e.val_loss) << ','
            << format_real(e.val_f1) << ',' << format_real(e.grad_norm) << '\n';
    }
}

}  // namespace qembed

#endif  // QEMBED_TRAINING_HPP_
