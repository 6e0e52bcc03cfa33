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

#ifndef QEMBED_METRICS_HPP_
#define QEMBED_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qembed/error.hpp"

namespace qembed {

/// Binary classification metrics with label 1 as the positive class.
struct MetricsReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    bool operator==(const MetricsReport &) const = default;
};

/// Metrics from confusion counts; any zero denominator yields 0 for that metric.
inline MetricsReport metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
    MetricsReport m;
    m.tp = tp;
    m.fp = fp;
    m.tn = tn;
    m.fn = fn;
    const auto d = [](std::size_t x) { return static_cast<double>(x); };
    const std::size_t total = tp + fp + tn + fn;
    m.accuracy = total ? d(tp + tn) / d(total) : 0.0;
    m.precision = (tp + fp) ? d(tp) / d(tp + fp) : 0.0;
    m.recall = (tp + fn) ? d(tp) / d(tp + fn) : 0.0;
    const double pr = m.precision + m.recall;
    m.f1 = pr > 0.0 ? 2.0 * m.precision * m.recall / pr : 0.0;
    return m;
}

inline MetricsReport compute_metrics(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size()) {
        throw ShapeError("prediction and label counts differ");
    }
    if (predictions.empty()) {
        throw SizeError("cannot compute metrics on zero samples");
    }
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool pred = predictions[i] == 1;
        const bool truth = labels[i] == 1;
        if (pred && truth) {
            ++tp;
        } else if (pred) {
            ++fp;
        } else if (truth) {
            ++fn;
        } else {
            ++tn;
        }
    }
    return metrics_from_counts(tp, fp, tn, fn);
}

inline nlohmann::json to_json(const MetricsReport &m) {
    return {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
            {"tp", m.tp},           {"fp", m.fp},               {"tn", m.tn},         {"fn", m.fn}};
}

inline double median(std::vector<double> values) {
    if (values.empty()) {
        throw SizeError("median of empty list");
    }
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

/// Population standard deviation (divides by n).
inline double population_sd(std::span<const double> values) {
    if (values.empty()) {
        throw SizeError("standard deviation of empty list");
    }
    // Deviations are taken about the first value, so a constant list gives exactly 0.
    const double shift = values[0];
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) {
        mean += v - shift;
    }
    mean /= n;
    double ss = 0.0;
    for (double v : values) {
        const double d = (v - shift) - mean;
        ss += d * d;
    }
    return std::sqrt(ss / n);
}

/// Cross-seed F1 statistics for one method.
struct BenchmarkSummary {
    std::string method;
    std::vector<std::int64_t> seeds;
    std::vector<double> f1;
    double median_f1 = 0.0;
    double sd_f1 = 0.0;
};

inline BenchmarkSummary summarize(std::string method, std::vector<std::int64_t> seeds, std::vector<double> f1) {
    if (seeds.size() != f1.size()) {
        throw ShapeError("seed and F1 lists differ in length");
    }
    BenchmarkSummary s;
    s.method = std::move(method);
    s.median_f1 = median(f1);
    s.sd_f1 = population_sd(f1);
    s.seeds = std::move(seeds);
    s.f1 = std::move(f1);
    return s;
}

inline nlohmann::json to_json(const BenchmarkSummary &s) {
    return {{"method", s.method}, {"runs", s.f1.size()},      {"seeds", s.seeds},
            {"f1", s.f1},         {"median_f1", s.median_f1}, {"sd_f1", s.sd_f1}};
}

inline BenchmarkSummary summary_from_json(const nlohmann::json &j) {
    return {j.at("method").get<std::string>(), j.at("seeds").get<std::vector<std::int64_t>>(),
            j.at("f1").get<std::vector<double>>(), j.at("median_f1").get<double>(), j.at("sd_f1").get<double>()};
}

/// One row of the comparison table; rows may come from external sources.
struct TableRow {
    std::string method;
    double sd = 0.0;
    double median_f1 = 0.0;
};

/// Fixed-width table with the columns Method, Standard Deviation, Median F1.
/// SD is printed with 4 decimals and median F1 with 3.
inline std::string render_table(std::span<const TableRow> rows) {
    std::size_t method_w = 6;
    for (const auto &r : rows) {
        method_w = std::max(method_w, r.method.size());
    }
    method_w += 2;
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(method_w)) << "Method" << std::right << std::setw(18)
        << "Standard Deviation" << std::setw(11) << "Median F1" << '\n';
    for (const auto &r : rows) {
        out << std::left << std::setw(static_cast<int>(method_w)) << r.method << std::right << std::fixed
            << std::setprecision(4) << std::setw(18) << r.sd << std::setprecision(3) << std::setw(11) << r.median_f1
            << '\n';
    }
    return out.str();
}

inline TableRow table_row(const BenchmarkSummary &s) {
    return {s.method, s.sd_f1, s.median_f1};
}

}  // namespace qembed

#endif  // QEMBED_METRICS_HPP_
