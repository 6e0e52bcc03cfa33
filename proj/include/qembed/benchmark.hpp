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

#ifndef QEMBED_BENCHMARK_HPP_
#define QEMBED_BENCHMARK_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "qembed/config.hpp"
#include "qembed/data.hpp"
#include "qembed/error.hpp"
#include "qembed/metrics.hpp"
#include "qembed/model.hpp"
#include "qembed/training.hpp"

namespace qembed {

/// Either a fixed dataset or a synthetic generator re-seeded per run.
struct DataSource {
    std::optional<Dataset> fixed;
    SyntheticSpec synthetic;
};

struct BenchmarkOptions {
    /// When set, each run writes history_<method>_seed<k>.csv here.
    std::optional<std::filesystem::path> history_dir;
    std::size_t jobs = 1;
};

struct SeedRun {
    std::int64_t seed = 0;
    MetricsReport validation;
    TrainingHistory history;
};

/// One full train/evaluate cycle. The seed drives data generation, the split,
/// parameter initialisation and shuffling.
inline SeedRun run_seed(const RunConfig &base, const DataSource &source, std::int64_t seed) {
    RunConfig cfg = base;
    cfg.train.seed = static_cast<std::uint64_t>(seed);
    Dataset data =
        source.fixed ? *source.fixed : generate_synthetic(source.synthetic, static_cast<std::uint64_t>(seed));
    ModelConfig mc = cfg.model;
    if (!mc.use_encoder) {
        mc.input_dim = data.dim;
    }
    auto split = stratified_split(data, cfg.train.validation_fraction, cfg.train.seed);
    auto model = init_hybrid_model(mc, cfg.train.seed);
    auto result = train(split.train, split.validation, std::move(model), cfg.train);
    return {seed, evaluate(result.model, split.validation), std::move(result.history)};
}

/// Trains one model per seed and summarises held-out F1 by median and population SD.
inline BenchmarkSummary run_benchmark(const std::string &method, const RunConfig &cfg, const DataSource &source,
                                      const std::vector<std::int64_t> &seeds, const BenchmarkOptions &opts = {},
                                      std::vector<SeedRun> *runs_out = nullptr) {
    if (seeds.size() < 2) {
        throw SizeError("benchmark needs at least 2 seeds");
    }
    std::vector<SeedRun> runs(seeds.size());
    auto run_one = [&](std::size_t i) {
        try {
            runs[i] = run_seed(cfg, source, seeds[i]);
        } catch (const std::exception &e) {
            throw Error("benchmark '" + method + "' failed at seed " + std::to_string(seeds[i]) + ": " + e.what());
        }
    };
    const std::size_t jobs = std::max<std::size_t>(1, opts.jobs);
    for (std::size_t start = 0; start < seeds.size(); start += jobs) {
        std::vector<std::future<void>> pending;
        for (std::size_t i = start; i < std::min(seeds.size(), start + jobs); ++i) {
            pending.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, run_one, i));
        }
        for (auto &f : pending) {
            f.get();
        }
    }
    std::vector<double> f1;
    for (const auto &r : runs) {
        f1.push_back(r.validation.f1);
        if (opts.history_dir) {
            std::filesystem::create_directories(*opts.history_dir);
            auto path = *opts.history_dir / ("history_" + method + "_seed" + std::to_string(r.seed) + ".csv");
            std::ofstream out(path, std::ios::binary);
            if (!out) {
                throw IoError("cannot write " + path.string());
            }
            write_history_csv(out, r.history);
        }
    }
    auto summary = summarize(method, seeds, std::move(f1));
    if (runs_out) {
        *runs_out = std::move(runs);
    }
    return summary;
}

}  // namespace qembed

#endif  // QEMBED_BENCHMARK_HPP_
