/*
 * Copyright 2026 The specfuse Authors.
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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "specfuse/config.h"
#include "specfuse/errors.h"
#include "specfuse/report.h"

namespace specfuse::cli {
namespace {

namespace fs = std::filesystem;

const char* kTinyConfig = R"(# small end-to-end run
clients = 3
rounds = 4
seed = 5
strategy = spectralfuse
model.hidden = 6
partition.kind = iid
data.classes = 3
data.features = 4
data.per_class = 20
train.batch_size = 16
detection.intervals = 2
sweep.q = 0.0001, 0.01
sweep.epsilon = 0.001
)";

fs::path TempDir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("specfuse_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string FirstLine(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

int RunCli(const std::string& args) {
  const std::string cmd = std::string(SPECFUSE_CLI_PATH) + " " + args +
                          " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(ConfigTest, ParsesKeys) {
  const auto c = parse_config_text(kTinyConfig);
  EXPECT_EQ(c.federation.n_clients, 3);
  EXPECT_EQ(c.federation.rounds, 4);
  EXPECT_EQ(c.federation.hidden, std::vector<int>{6});
  EXPECT_EQ(c.federation.partition, data::PartitionKind::kIid);
  EXPECT_EQ(c.sweep_q, (std::vector<double>{1e-4, 1e-2}));
  EXPECT_EQ(c.detection_intervals, 2);
  EXPECT_FALSE(c.federation.free_rider.has_value());
}

TEST(ConfigTest, SerializeRoundTrips) {
  auto c = parse_config_text(kTinyConfig);
  c.federation.free_rider = federation::FreeRiderSpec{1, 3};
  c.federation.filter.process_noise = 0.1 + 0.2;  // not exactly 0.3
  c.seeds = {1, 2, 9};
  EXPECT_EQ(parse_config_text(serialize_config(c)), c);
}

TEST(ConfigTest, DefaultsRoundTrip) {
  const ExperimentConfig c;
  EXPECT_EQ(parse_config_text(serialize_config(c)), c);
}

TEST(ConfigTest, ErrorsNameTheKey) {
  auto key_of = [](const std::string& text) {
    try {
      parse_config_text(text);
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(key_of("clients = 3\nbogus = 1\n"), "bogus");
  EXPECT_EQ(key_of("clients = 3\nclients = 4\n"), "clients");
  EXPECT_EQ(key_of("rounds = ten\n"), "rounds");
  EXPECT_EQ(key_of("strategy = fedprox\n"), "strategy");
  EXPECT_EQ(key_of("scoring.momentum = 1.5\n"), "scoring.momentum");
  EXPECT_EQ(key_of("partition.kind = zipf\n"), "partition.kind");
  EXPECT_THROW(parse_config("/nonexistent/specfuse.cfg"), ConfigError);
}

federation::RoundRecord SampleRecord() {
  federation::RoundRecord r;
  r.round = 7;
  r.raw_entropy = {0.1, 1.0 / 3.0};
  r.smoothed_entropy = {0.2, 0.7};
  r.weights = {0.25, 0.75};
  r.global_accuracy = 0.8125;
  r.pearson = -0.1;
  r.spearman = 1.0;
  return r;
}

TEST(ReportTest, JsonlRoundTripIsExact) {
  const auto dir = TempDir("jsonl");
  std::vector<federation::RoundRecord> log{SampleRecord(), SampleRecord()};
  log[1].round = 8;
  write_rounds_jsonl(dir / "r.jsonl", log);
  EXPECT_EQ(read_rounds_jsonl(dir / "r.jsonl"), log);
}

TEST(ReportTest, SummaryCsvLayout) {
  std::ostringstream out;
  const std::vector<federation::RoundRecord> log{SampleRecord()};
  write_summary_csv(out, log);
  std::istringstream in(out.str());
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "round,weight_0,weight_1,pearson,spearman,global_acc");
  EXPECT_EQ(row, "7,0.25,0.75,-0.1,1,0.8125");
}

TEST(ReportTest, TimingStats) {
  const std::vector<federation::PhaseTiming> t{{1, 2, 3}, {3, 2, 1}};
  const auto r = timing_report(t);
  EXPECT_DOUBLE_EQ(r.scoring.mean_ms, 2.0);
  EXPECT_DOUBLE_EQ(r.scoring.std_ms, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(r.fusion.std_ms, 0.0);
  EXPECT_DOUBLE_EQ(r.total.mean_ms, 6.0);
  EXPECT_THROW(timing_report(std::vector<federation::PhaseTiming>(1)),
               InsufficientDataError);
}

TEST(ReportTest, OutDirResolution) {
  EXPECT_EQ(resolve_out_dir("x/y"), fs::path("x/y"));
  ::setenv(kOutDirEnv, "/tmp/from-env", 1);
  EXPECT_EQ(resolve_out_dir(""), fs::path("/tmp/from-env"));
  ::unsetenv(kOutDirEnv);
  EXPECT_EQ(resolve_out_dir(""), fs::path("specfuse-out"));
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = TempDir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::ofstream(dir_ / "cfg.txt") << kTinyConfig;
  }
  std::string Args(const std::string& cmd, const std::string& extra = "") {
    return cmd + " --config " + (dir_ / "cfg.txt").string() + " --out " +
           (dir_ / "out").string() + " " + extra;
  }
  fs::path dir_;
};

TEST_F(CliTest, RunWritesLogs) {
  ASSERT_EQ(RunCli(Args("run")), 0);
  const auto log = read_rounds_jsonl(dir_ / "out" / "rounds.jsonl");
  ASSERT_EQ(log.size(), 4u);
  EXPECT_EQ(log[0].fused.size(), 3u);
  EXPECT_EQ(FirstLine(dir_ / "out" / "summary.csv"),
            "round,weight_0,weight_1,weight_2,pearson,spearman,global_acc");
  const auto manifest = nlohmann::json::parse(ReadFile(dir_ / "out" / "manifest.json"));
  EXPECT_EQ(manifest["command"], "run");
  EXPECT_EQ(manifest["version"], kToolVersion);
}

TEST_F(CliTest, SeedsFlagWritesPerSeedDirectories) {
  ASSERT_EQ(RunCli(Args("run", "--seeds 1,2")), 0);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "seed-1" / "rounds.jsonl"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "seed-2" / "rounds.jsonl"));
  EXPECT_NE(ReadFile(dir_ / "out" / "seed-1" / "rounds.jsonl"),
            ReadFile(dir_ / "out" / "seed-2" / "rounds.jsonl"));
}

TEST_F(CliTest, WorkerCountDoesNotChangeOutput) {
  ASSERT_EQ(RunCli(Args("run", "--workers 1")), 0);
  const std::string one = ReadFile(dir_ / "out" / "rounds.jsonl");
  ASSERT_EQ(RunCli(Args("run", "--workers 3")), 0);
  EXPECT_EQ(ReadFile(dir_ / "out" / "rounds.jsonl"), one);
}

TEST_F(CliTest, FreeRiderWritesDetectionTable) {
  ASSERT_EQ(RunCli(Args("freerider")), 0);
  EXPECT_EQ(FirstLine(dir_ / "out" / "detection.csv"),
            "seed,interval_start,interval_end,client,free_rider,flag_rate");
}

TEST_F(CliTest, SweepAndLayerwise) {
  ASSERT_EQ(RunCli(Args("sweep")), 0);
  EXPECT_EQ(FirstLine(dir_ / "out" / "grid.csv"), "split,q,epsilon,seeds,mean_pearson");
  ASSERT_EQ(RunCli(Args("layerwise")), 0);
  EXPECT_EQ(FirstLine(dir_ / "out" / "layers.csv"),
            "layer,rows,cols,mean_pearson,best_in_seeds");
}

TEST_F(CliTest, BadInputsFail) {
  EXPECT_NE(RunCli("run --out " + dir_.string()), 0);  // missing --config
  EXPECT_NE(RunCli("train --config " + (dir_ / "cfg.txt").string()), 0);
  std::ofstream(dir_ / "bad.txt") << "clients = 1\n";
  EXPECT_EQ(RunCli("run --config " + (dir_ / "bad.txt").string() + " --out " +
                   (dir_ / "o").string()),
            1);
}

}  // namespace
}  // namespace specfuse::cli
