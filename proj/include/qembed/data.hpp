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

#ifndef QEMBED_DATA_HPP_
#define QEMBED_DATA_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qembed/error.hpp"
#include "qembed/numfmt.hpp"

namespace qembed {

struct EmbeddingRecord {
    std::string id;
    std::vector<double> features;
    int label = 0;

    bool operator==(const EmbeddingRecord &) const = default;
};

/// Records sharing one feature dimension.
struct Dataset {
    std::size_t dim = 0;
    std::vector<EmbeddingRecord> records;

    std::size_t size() const {
        return records.size();
    }
    bool empty() const {
        return records.empty();
    }
    bool operator==(const Dataset &) const = default;

    void add(EmbeddingRecord r) {
        if (records.empty() && dim == 0) {
            dim = r.features.size();
        }
        if (r.features.size() != dim) {
            throw ShapeError("record '" + r.id + "' has " + std::to_string(r.features.size()) +
                             " features, dataset has " + std::to_string(dim));
        }
        if (r.label != 0 && r.label != 1) {
            throw ShapeError("record '" + r.id + "' has non-binary label");
        }
        records.push_back(std::move(r));
    }

    Dataset subset(std::span<const std::size_t> indices) const {
        Dataset out;
        out.dim = dim;
        out.records.reserve(indices.size());
        for (auto i : indices) {
            out.records.push_back(records.at(i));
        }
        return out;
    }
};

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

}  // namespace detail

/// Parses the embedding CSV: header `id,label,f0,...,f{d-1}`, one record per line.
inline Dataset parse_embeddings(std::istream &in) {
    std::string line;
    std::size_t line_no = 0;
    std::size_t dim = 0;
    bool have_header = false;
    Dataset ds;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!have_header) {
            auto cols = detail::split_csv_line(line);
            if (cols.size() < 3 || trim(cols[0]) != "id" || trim(cols[1]) != "label") {
                throw ParseError("header must be id,label,f0,...", line_no);
            }
            dim = cols.size() - 2;
            for (std::size_t k = 0; k < dim; ++k) {
                if (trim(cols[k + 2]) != "f" + std::to_string(k)) {
                    throw ParseError("header column " + std::to_string(k + 2) + " must be f" + std::to_string(k),
                                     line_no);
                }
            }
            ds.dim = dim;
            have_header = true;
            continue;
        }
        if (trim(line).empty()) {
            continue;
        }
        auto cols = detail::split_csv_line(line);
        if (cols.size() != dim + 2) {
            throw ParseError("row '" + std::string(trim(cols[0])) + "' has " +
                                 std::to_string(cols.size() >= 2 ? cols.size() - 2 : 0) + " features, expected " +
                                 std::to_string(dim),
                             line_no);
        }
        EmbeddingRecord r;
        r.id = std::string(trim(cols[0]));
        auto label = parse_integer(trim(cols[1]));
        if (!label || (*label != 0 && *label != 1)) {
            throw ParseError("label must be 0 or 1, got '" + std::string(cols[1]) + "'", line_no);
        }
        r.label = static_cast<int>(*label);
        r.features.reserve(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            auto v = parse_real(trim(cols[k + 2]));
            if (!v || !std::isfinite(*v)) {
                throw ParseError("feature f" + std::to_string(k) + " is not a finite number", line_no);
            }
            r.features.push_back(*v);
        }
        ds.records.push_back(std::move(r));
    }
    if (!have_header) {
        throw ParseError("missing header");
    }
    if (ds.records.empty()) {
        throw ParseError("dataset has no records");
    }
    return ds;
}

inline Dataset load_embeddings(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open embeddings file '" + path + "'");
    }
    try {
        return parse_embeddings(in);
    } catch (const ParseError &e) {
        throw ParseError(path + ": " + e.what());
    }
}

/// Writes with canonical shortest round-trip float formatting, LF line endings.
inline void write_embeddings(std::ostream &out, const Dataset &ds) {
    out << "id,label";
    for (std::size_t k = 0; k < ds.dim; ++k) {
        out << ",f" << k;
    }
    out << '\n';
    for (const auto &r : ds.records) {
        out << r.id << ',' << r.label;
        for (double v : r.features) {
            out << ',' << format_real(v);
        }
        out << '\n';
    }
}

inline void save_embeddings(const std::string &path, const Dataset &ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    write_embeddings(out, ds);
    if (!out) {
        throw IoError("failed writing '" + path + "'");
    }
}

inline std::vector<double> random_unit_vector(std::size_t d, std::mt19937_64 &rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> u(d);
    double norm = 0.0;
    do {
        for (auto &x : u) {
            x = g(rng);
        }
        norm = std::sqrt(std::inner_product(u.begin(), u.end(), u.begin(), 0.0));
    } while (norm == 0.0);
    for (auto &x : u) {
        x /= norm;
    }
    return u;
}

struct SyntheticSpec {
    std::size_t n = 200;
    std::size_t d = 16;
    double separation = 6.0;
};

/// Two unit-variance Gaussian clusters centred at +/-(separation/2) u along a seeded
/// random unit direction u. Even rows are label 1 (the +u cluster), odd rows label 0.
/// Returns the dataset and, via `direction`, u itself when requested.
inline Dataset generate_synthetic(const SyntheticSpec &spec, std::uint64_t seed,
                                  std::vector<double> *direction = nullptr) {
    if (spec.n < 2 || spec.d < 1 || !(spec.separation >= 0.0) || !std::isfinite(spec.separation)) {
        throw SizeError("synthetic data needs n >= 2, d >= 1 and a finite separation >= 0");
    }
    std::mt19937_64 rng(seed);
    const auto u = random_unit_vector(spec.d, rng);
    std::normal_distribution<double> noise(0.0, 1.0);
    Dataset ds;
    ds.dim = spec.d;
    ds.records.reserve(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        EmbeddingRecord r;
        r.id = "s" + std::to_string(i);
        r.label = (i % 2 == 0) ? 1 : 0;
        const double offset = (r.label == 1 ? 0.5 : -0.5) * spec.separation;
        r.features.resize(spec.d);
        for (std::size_t k = 0; k < spec.d; ++k) {
            r.features[k] = offset * u[k] + noise(rng);
        }
        ds.records.push_back(std::move(r));
    }
    if (direction) {
        *direction = u;
    }
    return ds;
}

struct Split {
    Dataset train;
    Dataset validation;
};

/// Label-stratified split: round(fraction * n_c) of each class goes to validation.
/// Both sides keep the original record order.
inline Split stratified_split(const Dataset &ds, double validation_fraction, std::uint64_t seed) {
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        throw ShapeError("validation fraction must be in (0, 1)");
    }
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> by_label[2];
    for (std::size_t i = 0; i < ds.size(); ++i) {
        by_label[ds.records[i].label].push_back(i);
    }
    std::vector<std::size_t> train_idx, val_idx;
    for (auto &group : by_label) {
        std::shuffle(group.begin(), group.end(), rng);
        const auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(group.size())));
        val_idx.insert(val_idx.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(n_val));
        train_idx.insert(train_idx.end(), group.begin() + static_cast<std::ptrdiff_t>(n_val), group.end());
    }
    if (train_idx.empty() || val_idx.empty()) {
        throw SizeError("validation split of " + std::to_string(ds.size()) +
                        " records leaves one side empty");
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
    return {ds.subset(train_idx), ds.subset(val_idx)};
}

}  // namespace qembed

#endif  // QEMBED_DATA_HPP_
