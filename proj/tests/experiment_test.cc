// Copyright 2026 The privrecon Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "privrecon/errors.hpp"
#include "privrecon/experiment.hpp"

namespace privrecon {
namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.dataset.shape = {4, 4, 1};
  cfg.prior_components = 4;
  cfg.train_size = 200;
  cfg.reference_size = 50;
  cfg.trials = 4;
  cfg.seed = 7;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Sweep, NoiselessTrialRecoversTarget) {
  auto cfg = small_config();
  cfg.trials = 1;
  cfg.clip_sigma = {{1.0, 0.0}};
  const auto report = run_sweep(cfg);
  ASSERT_EQ(report.rows.size(), 1u);
  const auto& row = report.rows.front();
  EXPECT_FALSE(row.failed) << row.error;
  EXPECT_FALSE(row.mu.has_value());
  EXPECT_FALSE(row.epsilon.has_value());
  EXPECT_LT(row.stats("attack_mse").mean, 1e-24);
  EXPECT_LT(row.stats("noisy_mse").mean, 1e-24);
  EXPECT_GT(report.reference.at("mse"), 0.0);
}

TEST(Sweep, AttackErrorFallsWithMu) {
  auto cfg = small_config();
  cfg.trials = 20;
  cfg.mus = {1, 3, 10, 30, 100};
  const auto report = run_sweep(cfg);
  ASSERT_EQ(report.rows.size(), 5u);
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    EXPECT_LT(report.rows[i].stats("attack_mse").mean, report.rows[i - 1].stats("attack_mse").mean);
    EXPECT_LT(*report.rows[i - 1].epsilon, *report.rows[i].epsilon);
  }
  for (const auto& row : report.rows) {
    EXPECT_EQ(row.stats("attack_mse").count, 20);
    EXPECT_TRUE(row.values.count("wavelet_mse"));
  }
}

TEST(Sweep, RerunIsByteIdentical) {
  auto cfg = small_config();
  cfg.mus = {2, 20};
  const auto base = std::filesystem::temp_directory_path() / "privrecon_experiment_test";
  std::filesystem::remove_all(base);
  cfg.output_dir = (base / "a").string();
  const auto ra = run_sweep(cfg);
  cfg.output_dir = (base / "b").string();
  const auto rb = run_sweep(cfg);
  EXPECT_EQ(report_csv(ra), report_csv(rb));
  const std::string csv = slurp(base / "a" / "sweep.csv");
  EXPECT_FALSE(csv.empty());
  EXPECT_EQ(csv, slurp(base / "b" / "sweep.csv"));
  // Manifests differ only in the output directory recorded in the config.
  auto ma = nlohmann::json::parse(slurp(base / "a" / "manifest.json"));
  auto mb = nlohmann::json::parse(slurp(base / "b" / "manifest.json"));
  ma["config"].erase("output_dir");
  mb["config"].erase("output_dir");
  EXPECT_EQ(ma, mb);
  EXPECT_EQ(ma["rows"], 2);
  std::filesystem::remove_all(base);
}

TEST(Sweep, CsvLayout) {
  auto cfg = small_config();
  cfg.mus = {5};
  cfg.trials = 2;
  const std::string csv = report_csv(run_sweep(cfg));
  const std::string header = csv.substr(0, csv.find('\n'));
  EXPECT_EQ(header.rfind("clip_norm,noise_multiplier,mu,epsilon,status,", 0), 0u) << header;
  EXPECT_NE(header.find("attack_mse_mean"), std::string::npos);
  EXPECT_NE(header.find("pairwise_mse"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST(Sweep, FailingRowIsReportedNotThrown) {
  auto cfg = small_config();
  cfg.trials = 1;
  cfg.clip_sigma = {{1.0, 0.5}, {1.0, 1e5}};
  const auto report = run_sweep(cfg);
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_FALSE(report.rows[0].failed);
  EXPECT_TRUE(report.rows[1].failed);
  EXPECT_FALSE(report.rows[1].error.empty());
  EXPECT_NE(report_csv(report).find("failed"), std::string::npos);
}

TEST(Sweep, ConsensusAndReroColumns) {
  auto cfg = small_config();
  cfg.mus = {10};
  cfg.trials = 2;
  cfg.attack = AttackMode::kConsensus;
  cfg.consensus_k = 3;
  cfg.rero_candidates = 8;
  const auto row = run_sweep(cfg).rows.front();
  EXPECT_FALSE(row.failed) << row.error;
  EXPECT_TRUE(row.values.count("consensus_mse"));
}

TEST(Config, JsonRoundTrip) {
  auto cfg = small_config();
  cfg.mus = {1, 2.5};
  cfg.clip_sigma = {{2.0, 0.1}};
  cfg.metrics = {Metric::kMse};
  cfg.target_family = DatasetFamily::kBars;
  cfg.prior_source = PriorSource::kGmmFit;
  cfg.sampler = SamplerMode::kDdpm;
  cfg.lambda_known = false;
  const auto j = config_to_json(cfg);
  EXPECT_EQ(config_to_json(config_from_json(j)), j);
  const auto back = config_from_json(j);
  EXPECT_EQ(back.mus, cfg.mus);
  EXPECT_EQ(back.target_family, cfg.target_family);
  EXPECT_EQ(back.sampler, SamplerMode::kDdpm);
  EXPECT_FALSE(back.lambda_known);
}

TEST(Config, Validation) {
  auto cfg = small_config();
  EXPECT_THROW(cfg.validate(), ArgumentError);  // empty grid
  cfg.mus = {1};
  EXPECT_NO_THROW(cfg.validate());
  auto bad = cfg;
  bad.trials = 0;
  EXPECT_THROW(bad.validate(), ArgumentError);
  bad = cfg;
  bad.metrics = {Metric::kSsim};
  EXPECT_THROW(bad.validate(), DimensionError);
  bad = cfg;
  bad.attack = AttackMode::kConsensus;
  bad.consensus_k = 1;
  EXPECT_THROW(bad.validate(), ArgumentError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"mus": "x"})")), FormatError);
  EXPECT_THROW(parse_prior_source("none"), ArgumentError);
  EXPECT_EQ(parse_attack_mode(attack_mode_name(AttackMode::kBatchBinning)), AttackMode::kBatchBinning);
}

TEST(Summary, MeanAndSampleStddev) {
  const auto s = summarize({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.stddev, std::sqrt(5.0 / 3.0), 1e-12);
  EXPECT_EQ(s.count, 4);
}

}  // namespace
}  // namespace privrecon
