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

#include "qembed/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gtest/gtest.h"

namespace fs = std::filesystem;
using namespace qembed;

namespace {

const std::string kConfigs = QEMBED_CONFIG_DIR;

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "qembed");
    std::vector<const char *> argv;
    for (const auto &a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class CliTest : public ::testing::Test {
   protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("qembed_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override {
        fs::remove_all(dir_);
    }
    std::string path(const std::string &name) const {
        return (dir_ / name).string();
    }
    std::string synth(const std::string &name = "data.csv", const std::string &n = "200") {
        auto r = run({"synth", "--n", n, "--d", "16", "--sep", "6", "--seed", "1", "--out", path(name)});
        EXPECT_EQ(r.code, 0) << r.err;
        return path(name);
    }

    fs::path dir_;
};

}  // namespace

TEST(cli, usage_errors) {
    auto r = run({});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE((r.out + r.err).find("Usage"), std::string::npos);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({"train"}).code, 2);
    EXPECT_EQ(run({"train", "--data", "x.csv", "--bogus"}).code, 2);
    EXPECT_EQ(run({"benchmark", "--seeds", "1,x"}).code, 2);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliTest, synth_then_train_with_toy_config) {
    auto data = synth();
    auto r = run({"train", "--data", data, "--config", kConfigs + "/toy_encoder.cfg", "--set", "train.epochs=3",
                  "--checkpoint", path("model.ckpt"), "--history", path("history.csv"), "--metrics",
                  path("metrics.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(path("model.ckpt")));
    auto hist = slurp(path("history.csv"));
    EXPECT_EQ(hist.rfind("epoch,train_loss,val_loss,val_f1,grad_norm\n", 0), 0u);
    EXPECT_EQ(std::count(hist.begin(), hist.end(), '\n'), 4);
    auto j = nlohmann::json::parse(slurp(path("metrics.json")));
    EXPECT_EQ(j.at("epochs"), 3);
    EXPECT_TRUE(j.at("class_token").get<bool>());
    EXPECT_EQ(j.at("validation").at("tp").get<int>() + j.at("validation").at("fn").get<int>(), 20);
    EXPECT_EQ(nlohmann::json::parse(r.out).at("validation"), j.at("validation"));

    auto ckpt = load_checkpoint(path("model.ckpt"));
    EXPECT_TRUE(ckpt.use_encoder);
    EXPECT_EQ(ckpt.encoder_config.layers, 2u);
}

TEST_F(CliTest, bypass_training_learns) {
    auto data = synth();
    auto r = run({"train", "--data", data, "--config", kConfigs + "/synthetic.cfg", "--seed", "1", "--checkpoint",
                  path("m.ckpt"), "--history", path("h.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_GE(nlohmann::json::parse(r.out).at("validation").at("f1").get<double>(), 0.95);

    auto e = run({"eval", "--data", data, "--checkpoint", path("m.ckpt"), "--out", path("eval.json")});
    ASSERT_EQ(e.code, 0) << e.err;
    auto metrics = nlohmann::json::parse(e.out);
    EXPECT_EQ(metrics, nlohmann::json::parse(slurp(path("eval.json"))));
    EXPECT_EQ(metrics.at("tp").get<int>() + metrics.at("fp").get<int>() + metrics.at("tn").get<int>() +
                  metrics.at("fn").get<int>(),
              200);
    EXPECT_GE(metrics.at("accuracy").get<double>(), 0.95);

    auto p = run({"predict", "--data", data, "--checkpoint", path("m.ckpt")});
    ASSERT_EQ(p.code, 0) << p.err;
    std::istringstream lines(p.out);
    std::string line;
    std::getline(lines, line);
    EXPECT_EQ(line, "id,label,p0,p1");
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
        auto cols = detail::split_csv_line(line);
        ASSERT_EQ(cols.size(), 4u);
        double p0 = *parse_real(cols[2]), p1 = *parse_real(cols[3]);
        EXPECT_NEAR(p0 + p1, 1.0, 1e-12);
        EXPECT_EQ(cols[1], p0 >= 0.5 ? "1" : "0");
        ++rows;
    }
    EXPECT_EQ(rows, 200u);
    EXPECT_EQ(run({"predict", "--data", data, "--checkpoint", path("m.ckpt"), "--out", path("p.csv")}).code, 0);
    EXPECT_EQ(slurp(path("p.csv")), p.out);
}

TEST_F(CliTest, train_is_reproducible) {
    auto data = synth();
    for (const char *tag : {"a", "b"}) {
        auto r = run({"train", "--data", data, "--config", kConfigs + "/toy_encoder.cfg", "--set", "train.epochs=4",
                      "--seed", "5", "--checkpoint", path(std::string(tag) + ".ckpt"), "--history",
                      path(std::string(tag) + ".csv")});
        ASSERT_EQ(r.code, 0) << r.err;
    }
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
    EXPECT_EQ(slurp(path("a.ckpt")), slurp(path("b.ckpt")));
}

TEST_F(CliTest, runtime_failures_exit_1) {
    EXPECT_EQ(run({"train", "--data", path("missing.csv")}).code, 1);
    {
        std::ofstream bad(path("bad.csv"));
        bad << "id,label,f0\na,5,0.1\n";
    }
    auto r = run({"train", "--data", path("bad.csv")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
    EXPECT_EQ(run({"train", "--data", synth(), "--set", "no.such.key=1"}).code, 1);
    EXPECT_EQ(run({"eval", "--data", synth(), "--checkpoint", path("nope.ckpt")}).code, 1);
}

TEST_F(CliTest, gradcheck) {
    auto r = run({"gradcheck", "--config", kConfigs + "/toy_encoder.cfg", "--seed", "7"});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    EXPECT_NE(r.out.find("gradcheck passed on 20 samples"), std::string::npos);
    EXPECT_NE(r.out.find("layer.1.attn.wq"), std::string::npos);
    EXPECT_NE(r.out.find("ansatz.theta"), std::string::npos);

    auto coarse = run({"gradcheck", "--config", kConfigs + "/toy_encoder.cfg", "--samples", "3", "--step", "0.5"});
    EXPECT_EQ(coarse.code, 1);
    EXPECT_NE(coarse.out.find("FAILED"), std::string::npos);
}

TEST_F(CliTest, dump_circuit) {
    auto r = run({"dump-circuit", "--set", "fm.qubits=2", "--set", "ansatz.layers=1", "--features", "0.5,-1",
                  "--theta", "0.1,0.2,0.3,0.4"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out,
              "H 0\nU1 0 1\nH 1\nU1 1 -2\nH 0\nU1 0 1\nH 1\nU1 1 -2\n"
              "RY 0 0.1\nRY 1 0.2\nCX 0 1\nRY 0 0.3\nRY 1 0.4\n");
    EXPECT_EQ(parse_circuit(r.out).size(), 13u);

    auto zeros = run({"dump-circuit"});
    EXPECT_EQ(zeros.out, "H 0\nU1 0 0\nH 0\nU1 0 0\nRY 0 0\n");
    EXPECT_EQ(run({"dump-circuit", "--features", "1,2"}).code, 1);
}

TEST_F(CliTest, dump_circuit_from_checkpoint) {
    auto data = synth("d.csv", "40");
    ASSERT_EQ(run({"train", "--data", data, "--set", "ansatz.layers=1", "--set", "train.epochs=2", "--checkpoint",
                   path("m.ckpt"), "--history", path("h.csv")})
                  .code,
              0);
    auto model = load_checkpoint(path("m.ckpt"));
    auto r = run({"dump-circuit", "--checkpoint", path("m.ckpt"), "--features", "0.25"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto expected = format_circuit(
        build_classifier_circuit(std::vector<double>{0.25}, model.theta_span(), model.feature_map, model.ansatz));
    EXPECT_EQ(r.out, expected);
}

TEST_F(CliTest, benchmark_writes_one_history_per_seed) {
    auto r = run({"benchmark", "--config", kConfigs + "/synthetic.cfg", "--num-seeds", "4", "--out-dir",
                  path("hist"), "--summary", path("summary.json"), "--row", "Transformer-based,0.0052,0.774",
                  "--jobs", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::size_t files = 0;
    for (const auto &e : fs::directory_iterator(path("hist"))) {
        EXPECT_EQ(e.path().filename().string().rfind("history_synthetic_seed", 0), 0u);
        ++files;
    }
    EXPECT_EQ(files, 4u);
    auto all = nlohmann::json::parse(slurp(path("summary.json")));
    ASSERT_EQ(all.size(), 1u);
    auto s = summary_from_json(all[0]);
    EXPECT_EQ(s.seeds, (std::vector<std::int64_t>{1, 2, 3, 4}));
    EXPECT_NEAR(median(s.f1), s.median_f1, 1e-12);
    EXPECT_NEAR(population_sd(s.f1), s.sd_f1, 1e-12);
    EXPECT_NE(r.out.find("Method"), std::string::npos);
    EXPECT_NE(r.out.find("synthetic"), std::string::npos);
    EXPECT_NE(r.out.find("Transformer-based              0.0052      0.774"), std::string::npos) << r.out;
}

TEST_F(CliTest, benchmark_validation) {
    EXPECT_EQ(run({"benchmark", "--seeds", "3"}).code, 1);
    EXPECT_EQ(run({"benchmark", "--config", kConfigs + "/synthetic.cfg", "--label", "a", "--label", "b"}).code, 2);
    EXPECT_EQ(run({"benchmark", "--num-seeds", "2", "--n", "20", "--row", "x,1"}).code, 1);
}
