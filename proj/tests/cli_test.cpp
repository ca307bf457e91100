/*
 * Copyright 2026 The fcbm Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fcbm/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fcbm/checkpoint.hpp"
#include "fcbm/evaluation.hpp"
#include "fcbm/serve.hpp"
#include "gtest/gtest.h"
#include "json.hpp"

namespace fcbm {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Outcome {
  int code;
  std::string out, err;
};

Outcome fcbm(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& path, const std::string& text) { std::ofstream(path) << text; }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::path(::testing::TempDir()) /
          ("fcbm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    spit(dir / "spec.json",
         R"({"preset": "default", "k": 4, "d": 6, "n_train": 160, "n_val": 80, "n_test": 80})");
    spit(dir / "train.json", R"({"epochs": 3, "batch_size": 40, "head": "linear"})");
  }

  std::string p(const std::string& name) const { return (dir / name).string(); }

  void synth_and_train() {
    ASSERT_EQ(fcbm({"synth", "--spec", p("spec.json"), "--out", p("data")}).code, 0);
    const Outcome t = fcbm({"train", "--dataset", p("data/dataset.json"), "--config",
                            p("train.json"), "--out", p("run")});
    ASSERT_EQ(t.code, 0) << t.err;
  }

  fs::path dir;
};

TEST_F(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(fcbm({}).code, 1);
  EXPECT_EQ(fcbm({"bogus"}).code, 1);
  EXPECT_EQ(fcbm({"synth", "--out", p("x"), "--unknown-flag", "1"}).code, 1);
  EXPECT_EQ(fcbm({"eval", "--dataset", p("x")}).code, 1);
  EXPECT_EQ(fcbm({"eval", "--checkpoint", "a", "--dataset", "b", "--out", "c", "--split", "dev"})
                .code,
            1);
  EXPECT_EQ(fcbm({"--help"}).code, 0);
}

TEST_F(CliTest, SynthTrainEvalSmokePath) {
  synth_and_train();
  const json manifest = json::parse(slurp(dir / "data/dataset.json"));
  EXPECT_EQ(manifest["provenance"]["tool_version"], kToolVersion);
  EXPECT_TRUE(manifest["provenance"]["config_fingerprint"].is_string());

  EXPECT_TRUE(fs::exists(dir / "run/checkpoint.fcbm"));
  EXPECT_TRUE(fs::exists(dir / "run/trainlog.jsonl"));
  const json config = json::parse(slurp(dir / "run/config.json"));
  EXPECT_EQ(config["tool_version"], kToolVersion);

  const Outcome e = fcbm({"eval", "--checkpoint", p("run/checkpoint.fcbm"), "--dataset",
                          p("data/dataset.json"), "--split", "val", "--out", p("report.json")});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_NE(e.out.find("config: "), std::string::npos);
  EXPECT_NE(e.out.find("seed: 42"), std::string::npos);
  const json report = json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(report["split"], "val");
  EXPECT_EQ(report["tool_version"], kToolVersion);
  EXPECT_EQ(report["config_fingerprint"], config["config_fingerprint"]);
  EXPECT_EQ(report["head_kind"], "linear");

  std::ifstream log(dir / "run/trainlog.jsonl");
  std::string line, last;
  while (std::getline(log, line)) last = line;
  const json summary = json::parse(last);
  EXPECT_EQ(summary["type"], "summary");
  EXPECT_EQ(summary["config_fingerprint"], config["config_fingerprint"]);
}

TEST_F(CliTest, EvalReportMatchesLibrary) {
  synth_and_train();
  ASSERT_EQ(fcbm({"eval", "--checkpoint", p("run/checkpoint.fcbm"), "--dataset",
                  p("data/dataset.json"), "--out", p("report.json")})
                .code,
            0);
  const CbmModel model = load_checkpoint(dir / "run/checkpoint.fcbm");
  const Dataset ds = load_dataset(dir / "data/dataset.json");
  EXPECT_EQ(slurp(dir / "report.json"), report_text(evaluate(model, ds, Split::kTest, {})));
}

TEST_F(CliTest, RepeatedRunsAreByteIdentical) {
  std::vector<std::string> reports;
  for (const std::string tag : {"a", "b"}) {
    ASSERT_EQ(fcbm({"synth", "--spec", p("spec.json"), "--out", p("data" + tag), "--seed", "7"})
                  .code,
              0);
    ASSERT_EQ(fcbm({"train", "--dataset", p("data" + tag + "/dataset.json"), "--config",
                    p("train.json"), "--out", p("run" + tag), "--seed", "7"})
                  .code,
              0);
    ASSERT_EQ(fcbm({"eval", "--checkpoint", p("run" + tag + "/checkpoint.fcbm"), "--dataset",
                    p("data" + tag + "/dataset.json"), "--out", p("report" + tag + ".json")})
                  .code,
              0);
    reports.push_back(slurp(dir / ("report" + tag + ".json")));
  }
  EXPECT_EQ(reports[0], reports[1]);
  EXPECT_EQ(slurp(dir / "runa/checkpoint.fcbm"), slurp(dir / "runb/checkpoint.fcbm"));
}

TEST_F(CliTest, FlagsOverrideConfigFile) {
  ASSERT_EQ(fcbm({"synth", "--spec", p("spec.json"), "--out", p("data")}).code, 0);
  const Outcome t = fcbm({"train", "--dataset", p("data/dataset.json"), "--config",
                          p("train.json"), "--out", p("run"), "--epochs", "2", "--head", "kan",
                          "--leakage-loss", "off", "--seed", "9"});
  ASSERT_EQ(t.code, 0) << t.err;
  const json config = json::parse(slurp(dir / "run/config.json"));
  EXPECT_EQ(config["epochs"], 2);
  EXPECT_EQ(config["head"], "kan");
  EXPECT_EQ(config["use_leakage_loss"], false);
  EXPECT_EQ(config["seed"], 9);
  EXPECT_EQ(config["batch_size"], 40);
  EXPECT_NE(t.out.find("seed: 9"), std::string::npos);
  EXPECT_EQ(load_checkpoint(dir / "run/checkpoint.fcbm").seed, 9u);
}

TEST_F(CliTest, MismatchedCheckpointExitsTwo) {
  synth_and_train();
  spit(dir / "spec5.json",
       R"({"preset": "default", "k": 5, "d": 6, "n_train": 40, "n_val": 20, "n_test": 20})");
  ASSERT_EQ(fcbm({"synth", "--spec", p("spec5.json"), "--out", p("data5")}).code, 0);
  const Outcome e = fcbm({"eval", "--checkpoint", p("run/checkpoint.fcbm"), "--dataset",
                          p("data5/dataset.json"), "--out", p("report.json")});
  EXPECT_EQ(e.code, 2);
  EXPECT_NE(e.err.find("evaluate"), std::string::npos);
  EXPECT_NE(e.err.find("k=4"), std::string::npos);
  EXPECT_NE(e.err.find("k=5"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "report.json"));
}

TEST_F(CliTest, DataErrorsNameTheStage) {
  spit(dir / "bad.json", R"({"epochs": 3, "learning_rate": 0.1})");
  ASSERT_EQ(fcbm({"synth", "--spec", p("spec.json"), "--out", p("data")}).code, 0);
  const Outcome bad = fcbm({"train", "--dataset", p("data/dataset.json"), "--config",
                            p("bad.json"), "--out", p("run")});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("resolve config"), std::string::npos);

  const Outcome missing = fcbm({"train", "--dataset", p("nope.json"), "--out", p("run")});
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("load dataset"), std::string::npos);

  std::string ckpt = "not a checkpoint";
  spit(dir / "junk.fcbm", ckpt);
  const Outcome junk = fcbm({"eval", "--checkpoint", p("junk.fcbm"), "--dataset",
                             p("data/dataset.json"), "--out", p("r.json")});
  EXPECT_EQ(junk.code, 2);
  EXPECT_NE(junk.err.find("load checkpoint"), std::string::npos);
}

TEST_F(CliTest, EvalRefusesOtherFormatVersions) {
  synth_and_train();
  std::string bytes = slurp(dir / "run/checkpoint.fcbm");
  const std::string key = "\"format_version\":1";
  const auto pos = bytes.find(key);
  ASSERT_NE(pos, std::string::npos);
  bytes[pos + key.size() - 1] = '9';
  spit(dir / "v9.fcbm", bytes);
  const Outcome e = fcbm({"eval", "--checkpoint", p("v9.fcbm"), "--dataset",
                          p("data/dataset.json"), "--out", p("r.json")});
  EXPECT_EQ(e.code, 2);
  EXPECT_NE(e.err.find("load checkpoint"), std::string::npos);
}

TEST_F(CliTest, InterveneAndPareto) {
  synth_and_train();
  const Outcome iv = fcbm({"intervene", "--checkpoint", p("run/checkpoint.fcbm"), "--dataset",
                           p("data/dataset.json"), "--out", p("curve.json")});
  ASSERT_EQ(iv.code, 0) << iv.err;
  const json curve = json::parse(slurp(dir / "curve.json"));
  EXPECT_EQ(curve["kind"], "intervention");
  EXPECT_EQ(curve["order"].size(), 4u);
  EXPECT_EQ(curve["tool_version"], kToolVersion);
  EXPECT_TRUE(curve["config_fingerprint"].is_string());

  fs::create_directories(dir / "reports");
  for (const std::string split : {"val", "test"}) {
    ASSERT_EQ(fcbm({"eval", "--checkpoint", p("run/checkpoint.fcbm"), "--dataset",
                    p("data/dataset.json"), "--split", split, "--out",
                    p("reports/" + split + ".json")})
                  .code,
              0);
  }
  const Outcome pa = fcbm({"pareto", "--reports", p("reports/*.json"), "--out", p("pareto.json")});
  ASSERT_EQ(pa.code, 0) << pa.err;
  const json pareto = json::parse(slurp(dir / "pareto.json"));
  ASSERT_EQ(pareto["points"].size(), 2u);
  EXPECT_EQ(pareto["points"][0]["label"], "test");
  EXPECT_EQ(pareto["tool_version"], kToolVersion);

  EXPECT_EQ(fcbm({"pareto", "--reports", p("none/*.json"), "--out", p("x.json")}).code, 2);
}

TEST_F(CliTest, AblateWritesEveryCell) {
  ASSERT_EQ(fcbm({"synth", "--spec", p("spec.json"), "--out", p("data")}).code, 0);
  const Outcome ab = fcbm({"ablate", "--dataset", p("data/dataset.json"), "--config",
                           p("train.json"), "--epochs", "2", "--repeats", "1", "--out",
                           p("abl")});
  ASSERT_EQ(ab.code, 0) << ab.err;
  const json report = json::parse(slurp(dir / "abl/ablation.json"));
  ASSERT_EQ(report["rows"].size(), 4u);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir / "abl/reports")) {
    (void)entry;
    ++files;
  }
  EXPECT_EQ(files, 4u);
  EXPECT_EQ(json::parse(slurp(dir / "abl/pareto.json"))["points"].size(), 4u);
}

TEST_F(CliTest, AnnotateAttachesNormalizedScores) {
  ASSERT_EQ(fcbm({"synth", "--spec", p("spec.json"), "--out", p("data")}).code, 0);
  std::string embs;
  for (int j = 0; j < 3; ++j) {
    json e = json::array();
    for (int i = 0; i < 6; ++i) e.push_back(i == 2 * j ? 1.0 : 0.1 * (i + 1));
    embs += json{{"name", "e" + std::to_string(j)}, {"e", e}}.dump() + "\n";
  }
  spit(dir / "embs.jsonl", embs);
  const Outcome an = fcbm({"annotate", "--dataset", p("data/dataset.json"), "--concept-embs",
                           p("embs.jsonl"), "--out", p("annotated/dataset.json")});
  ASSERT_EQ(an.code, 0) << an.err;
  const Dataset ds = load_dataset(dir / "annotated/dataset.json");
  EXPECT_EQ(ds.concepts.names(), (std::vector<std::string>{"e0", "e1", "e2"}));
  ASSERT_TRUE(ds.normalization.has_value());
  for (const auto& s : ds.samples)
    for (double v : s.c) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
}

}  // namespace
}  // namespace fcbm
