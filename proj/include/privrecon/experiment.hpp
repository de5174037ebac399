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

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "privrecon/accountant.hpp"
#include "privrecon/diffusion.hpp"
#include "privrecon/dp_release.hpp"
#include "privrecon/metrics.hpp"
#include "privrecon/priors.hpp"
#include "privrecon/toy_denoiser.hpp"

namespace privrecon {

// Environment variable naming the default data/output directory.
inline constexpr const char* kDataDirEnv = "PRIVRECON_DATA_DIR";
std::string default_data_dir();

enum class PriorSource { kGmmFit, kToyDenoiser, kExactGmm };
enum class AttackMode { kSingle, kBatchBinning, kConsensus };

const char* prior_source_name(PriorSource s);
PriorSource parse_prior_source(const std::string& s);
const char* attack_mode_name(AttackMode m);
AttackMode parse_attack_mode(const std::string& s);

struct ExperimentConfig {
  DatasetSpec dataset;
  // Targets come from this family instead of the prior's (shift studies).
  std::optional<DatasetFamily> target_family;
  PriorSource prior_source = PriorSource::kExactGmm;
  int prior_components = 16;
  int train_size = 2000;
  ToyTrainConfig toy;

  // Privacy grid: mu values at `clip_norm`, plus explicit (C, sigma) pairs.
  double clip_norm = 1.0;
  std::vector<double> mus;
  std::vector<PrivacyParams> clip_sigma;

  AttackMode attack = AttackMode::kSingle;
  SamplerMode sampler = SamplerMode::kDdim;
  int consensus_k = 5;
  int batch_size = 64;
  int num_bins = 128;
  double decoy_norm = 0.0;
  bool lambda_known = true;
  int rero_candidates = 256;
  // Images drawn for the pairwise-baseline reference.
  int reference_size = 1000;

  std::vector<Metric> metrics{Metric::kMse};
  int trials = 50;
  std::uint64_t seed = 0;
  std::string output_dir;
  AccountantConfig accountant;

  std::vector<PrivacyParams> grid() const;
  void validate() const;
};

nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

// A prior ready for attacks, plus the target distribution it is evaluated on.
struct PreparedPrior {
  std::shared_ptr<const NoisePredictor> predictor;
  std::optional<GmmPrior> gmm;
  NoiseSchedule schedule = default_schedule();
  double mean_train_norm = 0.0;
};

PreparedPrior prepare_prior(const ExperimentConfig& cfg);

// Clean targets drawn from the configured target distribution.
std::vector<ImageTensor> draw_targets(const ExperimentConfig& cfg,
                                      const PreparedPrior& prior, int n,
                                      RngSeed seed);

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;
  int count = 0;
};

MetricStats summarize(const std::vector<double>& values);

struct SweepRow {
  PrivacyParams params;
  std::optional<double> mu;       // absent for sigma = 0
  std::optional<double> epsilon;  // absent for sigma = 0
  bool failed = false;
  std::string error;
  // Column name -> per-trial values, e.g. "attack_mse", "noisy_ssim".
  std::map<std::string, std::vector<double>> values;

  MetricStats stats(const std::string& column) const;
};

struct SweepReport {
  ExperimentConfig config;
  std::map<std::string, double> reference;  // pairwise baseline per metric
  std::vector<SweepRow> rows;
};

SweepReport run_sweep(const ExperimentConfig& cfg);

std::string report_csv(const SweepReport& report);
nlohmann::json report_manifest(const SweepReport& report);
nlohmann::json report_to_json(const SweepReport& report);
// Writes sweep.csv and manifest.json into `dir` (created if missing).
void write_report(const SweepReport& report, const std::string& dir);

}  // namespace privrecon
