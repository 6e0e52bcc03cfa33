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

#ifndef QEMBED_GRADCHECK_HPP_
#define QEMBED_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "qembed/autodiff.hpp"
#include "qembed/data.hpp"
#include "qembed/model.hpp"

namespace qembed {

struct GradcheckTolerance {
    double h = 1e-5;
    double abs = 1e-6;
    double rel = 1e-4;

    bool accepts(double analytic, double numeric) const {
        return std::abs(analytic - numeric) <= std::max(abs, rel * std::abs(numeric));
    }
};

/// Worst deviation of one parameter matrix across all checked samples and entries.
struct GradcheckGroup {
    std::string name;
    std::size_t entries = 0;
    std::size_t violations = 0;
    double max_abs = 0.0;
    double max_rel = 0.0;
};

struct GradcheckReport {
    std::vector<GradcheckGroup> groups;
    std::size_t samples = 0;

    bool ok() const {
        return std::all_of(groups.begin(), groups.end(), [](const auto &g) { return g.violations == 0; });
    }
};

/// Compares backward() against central differences of the sample loss for every entry
/// of every parameter matrix.
inline GradcheckReport gradcheck(const HybridModel &model, const Dataset &samples, const GradcheckTolerance &tol = {}) {
    GradcheckReport report;
    report.samples = samples.size();
    HybridModel probe = model;
    std::vector<Mat *> probe_params;
    for_each_parameter(probe, [&](const std::string &name, Mat &m) {
        report.groups.push_back({name});
        probe_params.push_back(&m);
    });
    for (const auto &rec : samples.records) {
        auto grads = backward(model, forward(model, rec.features, rec.label));
        for (std::size_t gi = 0; gi < grads.size(); ++gi) {
            Mat &target = *probe_params[gi];
            auto &group = report.groups[gi];
            for (Eigen::Index e = 0; e < target.size(); ++e) {
                const double original = target.data()[e];
                auto loss_at = [&](const std::vector<double> &v) {
                    target.data()[e] = v[0];
                    return sample_loss(probe, rec.features, rec.label);
                };
                const double numeric = finite_diff_grad(loss_at, std::vector<double>{original}, 0, tol.h);
                target.data()[e] = original;
                const double analytic = grads[gi].value.data()[e];
                const double dev = std::abs(analytic - numeric);
                const double rel = numeric != 0.0 ? dev / std::abs(numeric)
                                                   : (dev == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
                group.max_abs = std::max(group.max_abs, dev);
                group.max_rel = std::max(group.max_rel, rel);
                ++group.entries;
                if (!tol.accepts(analytic, numeric)) {
                    ++group.violations;
                }
            }
        }
    }
    return report;
}

/// Smallest |pre-activation| over every FFN unit for one input; infinity without an encoder.
inline double relu_margin(const HybridModel &model, std::span<const double> input) {
    if (!model.use_encoder) {
        return std::numeric_limits<double>::infinity();
    }
    auto cache = encode_with_cache(image_from_flat(input, model.encoder_config), model.encoder, model.encoder_config);
    double margin = std::numeric_limits<double>::infinity();
    for (const auto &l : cache.layers) {
        margin = std::min(margin, l.ffn.pre.cwiseAbs().minCoeff());
    }
    return margin;
}

/// Random inputs for gradient checking. Images are uniform on [-1, 1], embeddings
/// standard normal; labels alternate. Inputs with an FFN pre-activation within
/// `kink_margin` of zero are redrawn, because the loss is not differentiable there.
inline Dataset make_gradcheck_samples(const HybridModel &model, std::size_t n, std::uint64_t seed,
                                      double kink_margin = 1e-4) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Dataset ds;
    ds.dim = model.input_dim();
    while (ds.size() < n) {
        EmbeddingRecord r;
        r.id = "g" + std::to_string(ds.size());
        r.label = ds.size() % 2 == 0 ? 1 : 0;
        r.features.resize(ds.dim);
        for (auto &x : r.features) {
            x = model.use_encoder ? uni(rng) : gauss(rng);
        }
        if (relu_margin(model, r.features) < kink_margin) {
            continue;
        }
        ds.records.push_back(std::move(r));
    }
    return ds;
}

}  // namespace qembed

#endif  // QEMBED_GRADCHECK_HPP_
