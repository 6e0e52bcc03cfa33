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

#ifndef QEMBED_CLI_HPP_
#define QEMBED_CLI_HPP_

#include <cctype>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qembed/benchmark.hpp"
#include "qembed/checkpoint.hpp"
#include "qembed/config.hpp"
#include "qembed/data.hpp"
#include "qembed/embedding.hpp"
#include "qembed/gradcheck.hpp"
#include "qembed/metrics.hpp"
#include "qembed/model.hpp"
#include "qembed/training.hpp"

namespace qembed {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

/// Config file (optional) followed by `--set key=value` overrides and a seed override.
struct ConfigFlags {
    std::string path;
    std::vector<std::string> overrides;
    std::optional<std::int64_t> seed;

    void attach(CLI::App *cmd) {
        cmd->add_option("--config", path, "flat key = value config file");
        cmd->add_option("--set", overrides, "override a config key (key=value), repeatable");
        cmd->add_option("--seed", seed, "override train.seed");
    }

    RunConfig resolve() const {
        RunConfig cfg = path.empty() ? RunConfig{} : load_config(path);
        for (const auto &o : overrides) {
            apply_override(cfg, o);
        }
        if (seed) {
            cfg.train.seed = static_cast<std::uint64_t>(*seed);
        }
        return cfg;
    }
};

inline void write_text_file(const std::string &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) {
        throw IoError("cannot write '" + path + "'");
    }
}

inline std::string file_safe(std::string s) {
    for (auto &c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') {
            c = '_';
        }
    }
    return s;
}

inline TableRow parse_table_row(const std::string &spec) {
    auto cols = split_csv_line(spec);
    if (cols.size() != 3) {
        throw ParseError("--row expects 'method,sd,median_f1', got '" + spec + "'");
    }
    auto sd = parse_real(trim(cols[1]));
    auto med = parse_real(trim(cols[2]));
    if (!sd || !med) {
        throw ParseError("--row values must be numbers: '" + spec + "'");
    }
    return {std::string(trim(cols[0])), *sd, *med};
}

}  // namespace detail

/// Entry point of the `qembed` tool. Returns 0 on success, 1 on validation or
/// tolerance failure, 2 on usage errors.
inline int cli_main(int argc, const char *const *argv, std::ostream &out = std::cout, std::ostream &err = std::cerr) {
    CLI::App app{"Hybrid transformer / quantum-circuit binary classifier"};
    app.name("qembed");

    // synth
    auto *synth = app.add_subcommand("synth", "write a synthetic two-cluster embedding dataset");
    SyntheticSpec sspec;
    std::int64_t synth_seed = 0;
    std::string synth_out;
    synth->add_option("--n", sspec.n, "number of records")->capture_default_str();
    synth->add_option("--d", sspec.d, "feature dimension")->capture_default_str();
    synth->add_option("--sep", sspec.separation, "distance between cluster means")->capture_default_str();
    synth->add_option("--seed", synth_seed, "generator seed")->capture_default_str();
    synth->add_option("--out", synth_out, "output CSV")->required();

    // train
    auto *train_cmd = app.add_subcommand("train", "train a model on an embedding CSV");
    detail::ConfigFlags train_flags;
    train_flags.attach(train_cmd);
    std::string train_data, train_ckpt = "model.ckpt", train_hist = "history.csv", train_metrics;
    bool freeze = false;
    train_cmd->add_option("--data", train_data, "embedding CSV")->required();
    train_cmd->add_option("--checkpoint", train_ckpt, "checkpoint output path")->capture_default_str();
    train_cmd->add_option("--history", train_hist, "history CSV output path")->capture_default_str();
    train_cmd->add_option("--metrics", train_metrics, "write validation metrics JSON here");
    train_cmd->add_flag("--freeze-encoder", freeze, "keep encoder weights fixed");

    // eval
    auto *eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a labelled CSV");
    std::string eval_data, eval_ckpt, eval_out;
    eval_cmd->add_option("--data", eval_data, "embedding CSV")->required();
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint")->required();
    eval_cmd->add_option("--out", eval_out, "write metrics JSON here as well");

    // predict
    auto *pred_cmd = app.add_subcommand("predict", "write per-record predictions");
    std::string pred_data, pred_ckpt, pred_out;
    pred_cmd->add_option("--data", pred_data, "embedding CSV")->required();
    pred_cmd->add_option("--checkpoint", pred_ckpt, "checkpoint")->required();
    pred_cmd->add_option("--out", pred_out, "predictions CSV (default: stdout)");

    // benchmark
    auto *bench = app.add_subcommand("benchmark", "multi-seed F1 sweep with a comparison table");
    std::vector<std::string> bench_configs, bench_labels, bench_rows, bench_sets;
    std::string bench_data, bench_dir, bench_summary;
    std::vector<std::int64_t> bench_seeds;
    std::size_t num_seeds = 10, jobs = 1;
    std::int64_t first_seed = 1;
    SyntheticSpec bspec;
    bench->add_option("--config", bench_configs, "method config file, repeatable");
    bench->add_option("--label", bench_labels, "method label, one per --config");
    bench->add_option("--set", bench_sets, "override applied to every method (key=value)");
    bench->add_option("--data", bench_data, "fixed embedding CSV instead of synthetic data");
    bench->add_option("--n", bspec.n, "synthetic records per seed")->capture_default_str();
    bench->add_option("--d", bspec.d, "synthetic dimension")->capture_default_str();
    bench->add_option("--sep", bspec.separation, "synthetic separation")->capture_default_str();
    bench->add_option("--seeds", bench_seeds, "explicit seed list")->delimiter(',');
    bench->add_option("--num-seeds", num_seeds, "number of seeds when --seeds is absent")->capture_default_str();
    bench->add_option("--first-seed", first_seed, "first seed when --seeds is absent")->capture_default_str();
    bench->add_option("--row", bench_rows, "external table row 'method,sd,median_f1', repeatable");
    bench->add_option("--out-dir", bench_dir, "directory for per-seed history CSVs");
    bench->add_option("--summary", bench_summary, "write summaries JSON here");
    bench->add_option("--jobs", jobs, "concurrent seed runs")->capture_default_str();

    // gradcheck
    auto *gc = app.add_subcommand("gradcheck", "compare analytic and finite-difference gradients");
    detail::ConfigFlags gc_flags;
    gc_flags.attach(gc);
    std::size_t gc_samples = 20;
    GradcheckTolerance tol;
    gc->add_option("--samples", gc_samples, "random samples to check")->capture_default_str();
    gc->add_option("--step", tol.h, "central-difference step")->capture_default_str();

    // dump-circuit
    auto *dump = app.add_subcommand("dump-circuit", "print the classifier circuit as a gate list");
    detail::ConfigFlags dump_flags;
    dump_flags.attach(dump);
    std::vector<double> dump_features, dump_theta;
    std::string dump_ckpt;
    dump->add_option("--features", dump_features, "feature-map inputs (default zeros)")->delimiter(',');
    dump->add_option("--theta", dump_theta, "ansatz angles (default zeros)")->delimiter(',');
    dump->add_option("--checkpoint", dump_ckpt, "take architecture and angles from a checkpoint");

    app.require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError &e) {
        app.exit(e, out, err);
        err << app.help();
        return kExitUsage;
    }

    try {
        if (synth->parsed()) {
            auto ds = generate_synthetic(sspec, static_cast<std::uint64_t>(synth_seed));
            save_embeddings(synth_out, ds);
            out << "wrote " << ds.size() << " records of dimension " << ds.dim << " to " << synth_out << '\n';
            return kExitOk;
        }

        if (train_cmd->parsed()) {
            RunConfig cfg = train_flags.resolve();
            if (freeze) {
                cfg.train.freeze_encoder = true;
            }
            auto data = load_embeddings(train_data);
            if (!cfg.model.use_encoder) {
                cfg.model.input_dim = data.dim;
            }
            auto split = stratified_split(data, cfg.train.validation_fraction, cfg.train.seed);
            auto model = init_hybrid_model(cfg.model, cfg.train.seed);
            auto result = train(split.train, split.validation, std::move(model), cfg.train);
            save_checkpoint(train_ckpt, result.model);
            {
                std::ofstream h(train_hist, std::ios::binary);
                if (!h) {
                    throw IoError("cannot write '" + train_hist + "'");
                }
                write_history_csv(h, result.history);
            }
            auto metrics = evaluate(result.model, split.validation);
            nlohmann::json j = {{"validation", to_json(metrics)},
                                {"epochs", result.history.epochs.size()},
                                {"best_epoch", result.history.best_epoch},
                                {"class_token", cfg.model.use_encoder && cfg.model.encoder.use_class_token},
                                {"wall_seconds", result.history.wall_seconds}};
            if (!train_metrics.empty()) {
                detail::write_text_file(train_metrics, j.dump(2) + "\n");
            }
            out << j.dump(2) << '\n';
            return kExitOk;
        }

        if (eval_cmd->parsed()) {
            auto model = load_checkpoint(eval_ckpt);
            auto metrics = evaluate(model, load_embeddings(eval_data));
            auto text = to_json(metrics).dump(2) + "\n";
            if (!eval_out.empty()) {
                detail::write_text_file(eval_out, text);
            }
            out << text;
            return kExitOk;
        }

        if (pred_cmd->parsed()) {
            auto model = load_checkpoint(pred_ckpt);
            auto data = load_embeddings(pred_data);
            std::ostringstream csv;
            csv << "id,label,p0,p1\n";
            for (const auto &r : data.records) {
                auto p = predict(model, r.features);
                csv << r.id << ',' << p.label << ',' << format_real(p.p0) << ',' << format_real(p.p1) << '\n';
            }
            if (pred_out.empty()) {
                out << csv.str();
            } else {
                detail::write_text_file(pred_out, csv.str());
            }
            return kExitOk;
        }

        if (bench->parsed()) {
            if (bench_seeds.empty()) {
                for (std::size_t i = 0; i < num_seeds; ++i) {
                    bench_seeds.push_back(first_seed + static_cast<std::int64_t>(i));
                }
            }
            if (!bench_labels.empty() && bench_labels.size() != std::max<std::size_t>(1, bench_configs.size())) {
                err << "error: --label count must match --config count\n";
                return kExitUsage;
            }
            std::vector<std::string> configs = bench_configs;
            if (configs.empty()) {
                configs.emplace_back();
            }
            DataSource source;
            source.synthetic = bspec;
            if (!bench_data.empty()) {
                source.fixed = load_embeddings(bench_data);
            }
            BenchmarkOptions opts;
            opts.jobs = jobs;
            if (!bench_dir.empty()) {
                opts.history_dir = bench_dir;
            }
            std::vector<TableRow> rows;
            nlohmann::json all = nlohmann::json::array();
            for (std::size_t i = 0; i < configs.size(); ++i) {
                RunConfig cfg = configs[i].empty() ? RunConfig{} : load_config(configs[i]);
                for (const auto &o : bench_sets) {
                    apply_override(cfg, o);
                }
                std::string label = !bench_labels.empty()
                                        ? bench_labels[i]
                                        : (configs[i].empty() ? std::string("default")
                                                              : std::filesystem::path(configs[i]).stem().string());
                auto run_opts = opts;
                auto summary = run_benchmark(detail::file_safe(label), cfg, source, bench_seeds, run_opts);
                summary.method = label;
                rows.push_back(table_row(summary));
                all.push_back(to_json(summary));
            }
            for (const auto &r : bench_rows) {
                rows.push_back(detail::parse_table_row(r));
            }
            if (!bench_summary.empty()) {
                detail::write_text_file(bench_summary, all.dump(2) + "\n");
            }
            out << render_table(rows);
            return kExitOk;
        }

        if (gc->parsed()) {
            RunConfig cfg = gc_flags.resolve();
            auto model = init_hybrid_model(cfg.model, cfg.train.seed);
            auto samples = make_gradcheck_samples(model, gc_samples, cfg.train.seed);
            auto report = gradcheck(model, samples, tol);
            out << std::left << std::setw(20) << "parameter" << std::right << std::setw(9) << "entries"
                << std::setw(14) << "max_abs" << std::setw(14) << "max_rel" << std::setw(12) << "violations"
                << '\n';
            for (const auto &g : report.groups) {
                out << std::left << std::setw(20) << g.name << std::right << std::setw(9) << g.entries
                    << std::scientific << std::setprecision(3) << std::setw(14) << g.max_abs << std::setw(14)
                    << g.max_rel << std::setw(12) << g.violations << std::defaultfloat << '\n';
            }
            out << (report.ok() ? "gradcheck passed" : "gradcheck FAILED") << " on " << report.samples
                << " samples\n";
            return report.ok() ? kExitOk : kExitFailure;
        }

        if (dump->parsed()) {
            FeatureMapSpec fm;
            AnsatzSpec an;
            if (!dump_ckpt.empty()) {
                auto model = load_checkpoint(dump_ckpt);
                fm = model.feature_map;
                an = model.ansatz;
                if (dump_theta.empty()) {
                    dump_theta.assign(model.theta_span().begin(), model.theta_span().end());
                }
            } else {
                RunConfig cfg = dump_flags.resolve();
                fm = cfg.model.feature_map;
                an = cfg.model.ansatz();
            }
            if (dump_features.empty()) {
                dump_features.assign(fm.n_qubits, 0.0);
            }
            if (dump_theta.empty()) {
                dump_theta.assign(an.parameter_count(), 0.0);
            }
            out << format_circuit(build_classifier_circuit(dump_features, dump_theta, fm, an));
            return kExitOk;
        }
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace qembed

#endif  // QEMBED_CLI_HPP_
