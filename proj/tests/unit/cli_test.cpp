// Copyright 2026 The modtl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli/commands.hpp"
#include "modtl/checkpoint.hpp"
#include "modtl/error.hpp"
#include "support/fixtures.hpp"

namespace modtl {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

const std::string kTiny = std::string(MODTL_CONFIG_DIR) + "/tiny.json";

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "modtl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir = new TempDir("modtl-cli");
    corpus = (dir->path() / "corpus").string();
    run = (dir->path() / "run").string();
    ASSERT_EQ(cli({"synth", "--config", kTiny, "--out", corpus}).code, 0);
    ASSERT_EQ(cli({"prepare", "--config", kTiny, "--corpus", corpus, "--output-dir", run}).code, 0);
    const Result r = cli({"train", "--config", kTiny, "--corpus", corpus, "--output-dir", run});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() { delete dir; }
  // predict and eval read the prepared split unless --corpus names another.
  static Result cmd(std::vector<std::string> head, const std::vector<std::string>& tail = {}) {
    std::vector<std::string> c = {"--config", kTiny, "--output-dir", run};
    if (head[0] != "predict" && head[0] != "eval" && head[0] != "compare") {
      c.insert(c.end(), {"--corpus", corpus});
    }
    head.insert(head.end(), c.begin(), c.end());
    head.insert(head.end(), tail.begin(), tail.end());
    return cli(head);
  }
  static inline TempDir* dir = nullptr;
  static inline std::string corpus, run;
};

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, 1);
  EXPECT_EQ(cli({"--help"}).code, 0);
  EXPECT_EQ(cli({"train", "--bogus"}).code, 1);
  EXPECT_EQ(cli({"train", "--loss", "hinge"}).code, 1);
  EXPECT_EQ(cli({"synth", "--out", "x"}).code, 1);
  EXPECT_EQ(cli({"predict"}).code, 1);
  const Result r = cli({"train", "--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("--no-hint"), std::string::npos);
}

TEST(Cli, ConfigAndDataErrors) {
  TempDir dir;
  testing::write_file(dir / "bad.json", "{ not json");
  EXPECT_EQ(cli({"train", "--config", (dir / "bad.json").string()}).code, 1);
  testing::write_file(dir / "wrong.json", R"({"train": {"batch_size": 0}})");
  EXPECT_EQ(cli({"train", "--config", (dir / "wrong.json").string()}).code, 1);
  EXPECT_EQ(cli({"train", "--corpus", (dir / "missing").string(), "--output-dir",
                 (dir / "run").string()})
                .code,
            2);
  EXPECT_EQ(cli({"train", "--exclude-class", "x"}).code, 1);
}

TEST(Cli, ErrorClasses) {
  EXPECT_EQ(classify(ErrorKind::kInvalidConfig), ErrorClass::kUsage);
  EXPECT_EQ(classify(ErrorKind::kDivergedLoss), ErrorClass::kNumerical);
  EXPECT_EQ(classify(ErrorKind::kMalformedLine), ErrorClass::kData);
  EXPECT_EQ(classify(ErrorKind::kCorruptCheckpoint), ErrorClass::kData);
}

TEST(Cli, ExperimentConfigRoundTrip) {
  const auto j = nlohmann::json::parse(testing::read_file(kTiny));
  const cli::ExperimentConfig c = cli::experiment_from_json(j);
  EXPECT_EQ(c.features.max_len, 32u);
  EXPECT_EQ(c.encoder.hidden_size, 16u);
  EXPECT_EQ(c.train.max_epochs, 2u);
  EXPECT_EQ(cli::to_json(cli::experiment_from_json(cli::to_json(c))), cli::to_json(c));
}

TEST(Cli, EnvironmentOverridesPaths) {
  ::setenv("MODTL_OUTPUT_DIR", "/tmp/elsewhere", 1);
  cli::ExperimentConfig c;
  cli::apply_path_overrides(c);
  ::unsetenv("MODTL_OUTPUT_DIR");
  EXPECT_EQ(c.output_dir, fs::path("/tmp/elsewhere"));
}

TEST(Cli, SynthDefaultsToConfiguredCorpus) {
  TempDir dir;
  ::setenv("MODTL_CORPUS", (dir / "corpus").c_str(), 1);
  const Result r = cli({"synth", "--config", kTiny, "--format", "jsonl"});
  ::unsetenv("MODTL_CORPUS");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "corpus" / "instances.jsonl"));
  EXPECT_TRUE(fs::exists(dir / "corpus" / "cues.jsonl"));
}

TEST_F(CliPipeline, PrepareWritesSplitsAndVocabulary) {
  for (const char* split : {"train", "dev", "test"}) {
    EXPECT_TRUE(fs::exists(fs::path(run) / "data" / split / "instances.jsonl")) << split;
  }
  EXPECT_TRUE(fs::exists(fs::path(run) / "data" / "vocab.json"));
  EXPECT_TRUE(fs::exists(fs::path(run) / "manifests" / "prepare.json"));
  const Result r = cmd({"stats"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("negation"), std::string::npos);
}

TEST_F(CliPipeline, TrainPredictEvalCompare) {
  const fs::path ckpt = fs::path(run) / "checkpoints" / "mt-tiny.ckpt";
  ASSERT_TRUE(fs::exists(ckpt));
  EXPECT_EQ(load_checkpoint(ckpt).history.size(), 2u);
  ASSERT_EQ(cmd({"predict"}, {"--checkpoint", ckpt.string()}).code, 0);
  const fs::path preds = fs::path(run) / "predictions" / "mt-tiny.test.jsonl";
  ASSERT_TRUE(fs::exists(preds));
  const Result ev = cmd({"eval"}, {"--predictions", preds.string()});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_NE(ev.out.find("weighted accuracy"), std::string::npos);
  const fs::path report = fs::path(run) / "reports" / "mt-tiny.test.json";
  ASSERT_TRUE(fs::exists(report));
  const Result cmp = cmd({"compare"}, {"--a", report.string(), "--b", report.string()});
  EXPECT_EQ(cmp.code, 0) << cmp.err;
  EXPECT_TRUE(fs::exists(fs::path(run) / "reports" / "comparison.json"));
  EXPECT_EQ(cmd({"predict"}, {"--checkpoint", (fs::path(run) / "none.ckpt").string()}).code, 2);
}

TEST_F(CliPipeline, SingleTaskAndTransfer) {
  const Result st = cmd({"single-task"}, {"--modifier", "negation", "--epochs", "1"});
  ASSERT_EQ(st.code, 0) << st.err;
  EXPECT_TRUE(fs::exists(fs::path(run) / "checkpoints" / "st-tiny-negation.ckpt"));
  EXPECT_EQ(cmd({"single-task"}, {"--modifier", "course", "--epochs", "1"}).code, 2);
  const fs::path src = fs::path(run) / "checkpoints" / "mt-tiny.ckpt";
  const Result tr = cmd({"transfer"}, {"--source-checkpoint", src.string(), "--tag", "ft",
                                       "--epochs", "1"});
  ASSERT_EQ(tr.code, 0) << tr.err;
  EXPECT_TRUE(fs::exists(fs::path(run) / "checkpoints" / "mt-tiny-ft.ckpt"));
}

TEST_F(CliPipeline, SingleTaskPredictionsCoverTheirModifier) {
  ASSERT_EQ(cmd({"single-task"}, {"--modifier", "negation", "--epochs", "1", "--tag", "one"}).code,
            0);
  const fs::path dir(run);
  const Result pr =
      cmd({"predict"}, {"--checkpoint", (dir / "checkpoints" / "st-one-negation.ckpt").string()});
  ASSERT_EQ(pr.code, 0) << pr.err;
  const fs::path preds = dir / "predictions" / "st-one-negation.test.jsonl";
  std::ifstream is(preds);
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    EXPECT_EQ(nlohmann::json::parse(line).at("modifier"), "negation");
    ++n;
  }
  EXPECT_GT(n, 0u);
  const Result ev = cmd({"eval"}, {"--predictions", preds.string()});
  ASSERT_EQ(ev.code, 0) << ev.err;
  const auto report = nlohmann::json::parse(std::ifstream(dir / "reports" / "st-one-negation.test.json"));
  EXPECT_EQ(report.at("modifiers").size(), 1u);

  const fs::path mt = dir / "checkpoints" / "mt-tiny.ckpt";
  ASSERT_EQ(cmd({"predict"}, {"--checkpoint", mt.string()}).code, 0);
  ASSERT_EQ(cmd({"eval"}, {"--predictions", (dir / "predictions" / "mt-tiny.test.jsonl").string()}).code, 0);
  const Result cmp = cmd({"compare"}, {"--a", (dir / "reports" / "mt-tiny.test.json").string(),
                                       "--b", (dir / "reports" / "st-one-negation.test.json").string()});
  ASSERT_EQ(cmp.code, 0) << cmp.err;
  EXPECT_NE(cmp.out.find("negation"), std::string::npos);
}

TEST_F(CliPipeline, FlagsOverrideConfig) {
  const Result r = cmd({"train"}, {"--tag", "flags", "--epochs", "1", "--no-hint", "--seed", "7"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Checkpoint ck = load_checkpoint(fs::path(run) / "checkpoints" / "mt-flags.ckpt");
  EXPECT_EQ(ck.history.size(), 1u);
  EXPECT_FALSE(ck.features.hint);
}

TEST_F(CliPipeline, RefitRetrainsOnTrainPlusDev) {
  const Result r = cmd({"train"}, {"--tag", "refit", "--refit-on-train-plus-dev"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Checkpoint tune = load_checkpoint(fs::path(run) / "checkpoints" / "mt-refit.tune.ckpt");
  const Checkpoint final = load_checkpoint(fs::path(run) / "checkpoints" / "mt-refit.ckpt");
  EXPECT_EQ(final.history.size(), tune.best_epoch);
}

TEST(CliBinary, ExitCodes) {
  const std::string bin = MODTL_CLI_PATH;
  auto status = [&](const std::string& args) {
    const int s = std::system((bin + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status("--help"), 0);
  EXPECT_EQ(status(""), 1);
  EXPECT_EQ(status("eval --predictions /nonexistent/p.jsonl --output-dir /nonexistent"), 2);
}

}  // namespace
}  // namespace modtl
