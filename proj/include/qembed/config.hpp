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

#ifndef QEMBED_CONFIG_HPP_
#define QEMBED_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qembed/error.hpp"
#include "qembed/model.hpp"
#include "qembed/numfmt.hpp"
#include "qembed/training.hpp"

namespace qembed {

/// Everything a run needs besides the data.
struct RunConfig {
    ModelConfig model;
    TrainingConfig train;
};

namespace detail {

struct ConfigKey {
    std::string name;
    bool model_key;  // recorded in checkpoints
    std::function<void(RunConfig &, std::string_view)> set;
    std::function<std::string(const RunConfig &)> get;
};

inline std::size_t to_size(std::string_view v, const std::string &key) {
    auto n = parse_integer(v);
    if (!n || *n < 0) {
        throw ParseError("key '" + key + "' expects a non-negative integer, got '" + std::string(v) + "'");
    }
    return static_cast<std::size_t>(*n);
}

inline double to_real(std::string_view v, const std::string &key) {
    auto x = parse_real(v);
    if (!x) {
        throw ParseError("key '" + key + "' expects a number, got '" + std::string(v) + "'");
    }
    return *x;
}

inline bool to_bool(std::string_view v, const std::string &key) {
    if (v == "true" || v == "1" || v == "yes") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no") {
        return false;
    }
    throw ParseError("key '" + key + "' expects true or false, got '" + std::string(v) + "'");
}

inline std::string bool_text(bool b) {
    return b ? "true" : "false";
}

#define QEMBED_SIZE_KEY(NAME, MODEL, FIELD)                                                    \
    ConfigKey {                                                                                \
        NAME, MODEL, [](RunConfig &c, std::string_view v) { c.FIELD = to_size(v, NAME); },     \
            [](const RunConfig &c) { return std::to_string(c.FIELD); }                         \
    }
#define QEMBED_REAL_KEY(NAME, MODEL, FIELD)                                                    \
    ConfigKey {                                                                                \
        NAME, MODEL, [](RunConfig &c, std::string_view v) { c.FIELD = to_real(v, NAME); },     \
            [](const RunConfig &c) { return format_real(c.FIELD); }                            \
    }
#define QEMBED_BOOL_KEY(NAME, MODEL, FIELD)                                                    \
    ConfigKey {                                                                                \
        NAME, MODEL, [](RunConfig &c, std::string_view v) { c.FIELD = to_bool(v, NAME); },     \
            [](const RunConfig &c) { return bool_text(c.FIELD); }                              \
    }

inline const std::vector<ConfigKey> &config_keys() {
    static const std::vector<ConfigKey> keys = {
        QEMBED_BOOL_KEY("encoder.enabled", true, model.use_encoder),
        QEMBED_SIZE_KEY("encoder.image_height", true, model.encoder.image_height),
        QEMBED_SIZE_KEY("encoder.image_width", true, model.encoder.image_width),
        QEMBED_SIZE_KEY("encoder.channels", true, model.encoder.channels),
        QEMBED_SIZE_KEY("encoder.patch_size", true, model.encoder.patch_size),
        QEMBED_SIZE_KEY("encoder.embed_dim", true, model.encoder.embed_dim),
        QEMBED_SIZE_KEY("encoder.depth", true, model.encoder.layers),
        QEMBED_SIZE_KEY("encoder.heads", true, model.encoder.heads),
        QEMBED_SIZE_KEY("encoder.ffn_hidden", true, model.encoder.ffn_hidden),
        QEMBED_SIZE_KEY("encoder.out_dim", true, model.encoder.out_dim),
        QEMBED_BOOL_KEY("encoder.class_token", true, model.encoder.use_class_token),
        QEMBED_BOOL_KEY("encoder.freeze", false, train.freeze_encoder),
        QEMBED_SIZE_KEY("reduce.in_dim", true, model.input_dim),
        QEMBED_SIZE_KEY("fm.qubits", true, model.feature_map.n_qubits),
        QEMBED_SIZE_KEY("fm.reps", true, model.feature_map.repetitions),
        QEMBED_REAL_KEY("fm.scale", true, model.feature_map.scale),
        QEMBED_SIZE_KEY("ansatz.layers", true, model.ansatz_layers),
        QEMBED_REAL_KEY("train.lr", false, train.learning_rate),
        QEMBED_SIZE_KEY("train.epochs", false, train.max_epochs),
        QEMBED_SIZE_KEY("train.batch_size", false, train.batch_size),
        ConfigKey{"train.optimizer", false,
                  [](RunConfig &c, std::string_view v) { c.train.optimizer.kind = parse_optimizer(std::string(v)); },
                  [](const RunConfig &c) { return optimizer_name(c.train.optimizer.kind); }},
        QEMBED_REAL_KEY("train.momentum", false, train.optimizer.momentum),
        QEMBED_REAL_KEY("train.beta1", false, train.optimizer.beta1),
        QEMBED_REAL_KEY("train.beta2", false, train.optimizer.beta2),
        QEMBED_REAL_KEY("train.eps", false, train.optimizer.eps),
        ConfigKey{"train.seed", false,
                  [](RunConfig &c, std::string_view v) {
                      auto n = parse_integer(v);
                      if (!n) {
                          throw ParseError("key 'train.seed' expects an integer, got '" + std::string(v) + "'");
                      }
                      c.train.seed = static_cast<std::uint64_t>(*n);
                  },
                  [](const RunConfig &c) { return std::to_string(c.train.seed); }},
        QEMBED_SIZE_KEY("train.patience", false, train.patience),
        QEMBED_REAL_KEY("train.min_delta", false, train.min_delta),
        QEMBED_REAL_KEY("train.val_fraction", false, train.validation_fraction),
    };
    return keys;
}

#undef QEMBED_SIZE_KEY
#undef QEMBED_REAL_KEY
#undef QEMBED_BOOL_KEY

}  // namespace detail

/// Sets one key. Unknown keys are a ParseError.
inline void set_config_value(RunConfig &cfg, std::string_view key, std::string_view value) {
    for (const auto &k : detail::config_keys()) {
        if (k.name == key) {
            k.set(cfg, trim(value));
            return;
        }
    }
    throw ParseError("unknown config key '" + std::string(key) + "'");
}

/// Applies a `key=value` override.
inline void apply_override(RunConfig &cfg, std::string_view assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ParseError("override '" + std::string(assignment) + "' is not of the form key=value");
    }
    set_config_value(cfg, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

/// Flat `key = value` lines; `#` starts a comment. Later lines override earlier ones.
inline void parse_config(std::istream &in, RunConfig &cfg) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view body = line;
        if (auto hash = body.find('#'); hash != std::string_view::npos) {
            body = body.substr(0, hash);
        }
        body = trim(body);
        if (body.empty()) {
            continue;
        }
        try {
            apply_override(cfg, body);
        } catch (const ParseError &e) {
            throw ParseError(e.what(), line_no);
        }
    }
}

inline RunConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file '" + path + "'");
    }
    RunConfig cfg;
    try {
        parse_config(in, cfg);
    } catch (const ParseError &e) {
        throw ParseError(path + ": " + e.what());
    }
    return cfg;
}

/// Every key with its current value, in registry order.
inline std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig &cfg, bool model_only) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto &k : detail::config_keys()) {
        if (!model_only || k.model_key) {
            out.emplace_back(k.name, k.get(cfg));
        }
    }
    return out;
}

/// Architecture of an existing model expressed as a ModelConfig.
inline ModelConfig model_config_of(const HybridModel &m) {
    ModelConfig c;
    c.use_encoder = m.use_encoder;
    c.encoder = m.encoder_config;
    c.input_dim = m.reduction.in_dim();
    c.feature_map = m.feature_map;
    c.ansatz_layers = m.ansatz.layers;
    return c;
}

}  // namespace qembed

#endif  // QEMBED_CONFIG_HPP_
