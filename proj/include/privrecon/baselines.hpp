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

#include <optional>
#include <vector>

#include "privrecon/diffusion.hpp"
#include "privrecon/dp_release.hpp"
#include "privrecon/image.hpp"
#include "privrecon/metrics.hpp"

namespace privrecon {

// Prior set for (0, gamma)-ReRo matching: uniform over `candidates`, the
// target is `candidates[target_index]`.
struct ReRoConfig {
  std::vector<ImageTensor> candidates;
  int target_index = 0;
  PrivacyParams params;

  void validate() const;
};

struct MatchOutcome {
  int chosen_index = -1;
  bool correct = false;
};

struct GammaEstimate {
  double gamma = 0.0;
  double standard_error = 0.0;
  int trials = 0;
};

GammaEstimate aggregate_gamma(const std::vector<MatchOutcome>& outcomes);

// argmax_i <x_priv, z_i / lambda_i>: matches the noisy clipped gradient
// against every candidate clipped the way DP-SGD would. Lowest index wins ties.
MatchOutcome rero_match(const PrivatizedObservation& obs, const ReRoConfig& cfg);

// Nearest candidate to a reconstruction (min MSE or max SSIM).
MatchOutcome match_reconstruction(const ImageTensor& rec, const ReRoConfig& cfg,
                                  Metric metric);

// Monte-Carlo success rate of rero_match with a uniformly drawn target per
// trial.
GammaEstimate estimate_rero_gamma(const std::vector<ImageTensor>& candidates,
                                  const PrivacyParams& params, int trials,
                                  RngSeed seed);

struct NoiseEstimate {
  double sigma_hat = 0.0;
};

// Robust median estimate from the finest diagonal Haar band:
// median(|HH|) / 0.6745, averaged over channels.
NoiseEstimate estimate_noise_sigma(const ImageTensor& img);

// Multi-level orthonormal Haar transform with soft-thresholding of every
// detail band at sigma_hat * sqrt(2 ln N), N = pixels per channel.
ImageTensor wavelet_denoise(const ImageTensor& img, double sigma_hat);

struct LambdaCandidate {
  double lambda = 1.0;
  double sigma_hat = 0.0;
  int t_start = 0;
  // Log-likelihood of x_priv under this lambda, via the prior's marginal at
  // the matched state. Absent when the predictor has no density or the
  // candidate overflows the schedule.
  std::optional<double> score;
  std::optional<ImageTensor> reconstruction;
};

struct LambdaSearch {
  std::optional<double> lambda_hat;
  std::vector<LambdaCandidate> candidates;
};

struct LambdaSearchOptions {
  int grid_size = 200;
  bool reconstruct = true;
  SamplerMode mode = SamplerMode::kDdim;
  RngSeed seed{0};
};

// Log-spaced grid over [1, sqrt(H W C) / C], the range of clipping factors a
// clean image can produce.
std::vector<double> lambda_grid(const ImageShape& shape, double clip_norm,
                                int grid_size);

LambdaSearch approximate_lambda(const PrivatizedObservation& obs,
                                const NoiseSchedule& sched,
                                const NoisePredictor& predictor,
                                const LambdaSearchOptions& options = {});

}  // namespace privrecon
