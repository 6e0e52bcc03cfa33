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

#ifndef QEMBED_CHECKPOINT_HPP_
#define QEMBED_CHECKPOINT_HPP_

#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qembed/config.hpp"
#include "qembed/error.hpp"
#include "qembed/model.hpp"
#include "qembed/numfmt.hpp"

namespace qembed {

/// Text checkpoint container, version 1. LF line endings, fields separated by one space:
///
///     qembed-checkpoint 1
///     meta <config key> <value>          one per architecture key
///     param <name> <rows> <cols>         followed by <rows> lines of <cols> values
///     ...
///     end
///
/// Values are float64 in shortest round-trip decimal form, row-major. Parameters appear
/// in canonical order (encoder, reduce.w, reduce.b, ansatz.theta).
inline constexpr const char *kCheckpointMagic = "qembed-checkpoint";
inline constexpr int kCheckpointVersion = 1;

inline void write_checkpoint(std::ostream &out, const HybridModel &model) {
    out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
    RunConfig rc;
    rc.model = model_config_of(model);
    for (const auto &[k, v] : config_entries(rc, true)) {
        out << "meta " << k << ' ' << v << '\n';
    }
    for_each_parameter(model, [&](const std::string &name, const Mat &m) {
        out << "param " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                if (c) {
                    out << ' ';
                }
                out << format_real(m(r, c));
            }
            out << '\n';
        }
    });
    out << "end\n";
}

inline HybridModel read_checkpoint(std::istream &in) {
    std::string line;
    std::size_t line_no = 0;
    auto next = [&](std::string &dst) {
        if (!std::getline(in, dst)) {
            throw ParseError("unexpected end of checkpoint", line_no + 1);
        }
        ++line_no;
    };
    next(line);
    if (line != std::string(kCheckpointMagic) + " " + std::to_string(kCheckpointVersion)) {
        throw ParseError("not a version-1 checkpoint", line_no);
    }
    RunConfig rc;
    std::map<std::string, Mat> payload;
    while (true) {
        next(line);
        std::istringstream fields(line);
        std::string tag;
        fields >> tag;
        if (tag == "end") {
            break;
        }
        if (tag == "meta") {
            std::string key, value;
            fields >> key >> value;
            try {
                set_config_value(rc, key, value);
            } catch (const ParseError &e) {
                throw ParseError(e.what(), line_no);
            }
            continue;
        }
        if (tag != "param") {
            throw ParseError("unexpected record '" + tag + "'", line_no);
        }
        std::string name;
        long long rows = -1, cols = -1;
        fields >> name >> rows >> cols;
        if (name.empty() || rows < 0 || cols < 0) {
            throw ParseError("malformed param header", line_no);
        }
        Mat m(rows, cols);
        for (long long r = 0; r < rows; ++r) {
            next(line);
            std::istringstream vals(line);
            std::string tok;
            for (long long c = 0; c < cols; ++c) {
                if (!(vals >> tok)) {
                    throw ParseError("row too short for " + name, line_no);
                }
                auto v = parse_real(tok);
                if (!v) {
                    throw ParseError("bad value '" + tok + "' in " + name, line_no);
                }
                m(r, c) = *v;
            }
            if (vals >> tok) {
                throw ParseError("row too long for " + name, line_no);
            }
        }
        if (!payload.emplace(name, std::move(m)).second) {
            throw ParseError("duplicate parameter " + name, line_no);
        }
    }

    HybridModel model = init_hybrid_model(rc.model, 0);
    std::size_t used = 0;
    for_each_parameter(model, [&](const std::string &name, Mat &m) {
        auto it = payload.find(name);
        if (it == payload.end()) {
            throw ParseError("checkpoint is missing parameter " + name);
        }
        if (it->second.rows() != m.rows() || it->second.cols() != m.cols()) {
            throw ShapeError("checkpoint parameter " + name + " has the wrong shape");
        }
        m = it->second;
        ++used;
    });
    if (used != payload.size()) {
        throw ParseError("checkpoint contains unknown parameters");
    }
    model.validate();
    return model;
}

inline void save_checkpoint(const std::string &path, const HybridModel &model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    write_checkpoint(out, model);
    if (!out) {
        throw IoError("failed writing '" + path + "'");
    }
}

inline HybridModel load_checkpoint(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open checkpoint '" + path + "'");
    }
    try {
        return read_checkpoint(in);
    } catch (const ParseError &e) {
        throw ParseError(path + ": " + e.what());
    }
}

}  // namespace qembed

#endif  // QEMBED_CHECKPOINT_HPP_
