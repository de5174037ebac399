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

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "privrecon/dp_release.hpp"
#include "privrecon/image.hpp"
#include "privrecon/metrics.hpp"
#include "privrecon/random.hpp"

namespace privrecon {

// Discrete diffusion schedule over steps t = 1..T. Index 0 is the clean state:
// alpha_bar(0) = 1 and sigma(0) = 0.
class NoiseSchedule {
 public:
  explicit NoiseSchedule(const std::vector<double>& betas);

  int steps() const { return static_cast<int>(betas_.size()) - 1; }
  double beta(int t) const { return betas_[check(t)]; }
  double alpha(int t) const { return 1.0 - betas_[check(t)]; }
  double alpha_bar(int t) const { return alpha_bars_[check(t)]; }
  // VE-form noise level sqrt(1 / alpha_bar - 1).
  double sigma(int t) const { return sigmas_[check(t)]; }
  double max_sigma() const { return sigmas_[steps()]; }

  const Eigen::VectorXd& alpha_bars() const { return alpha_bars_; }
  const Eigen::VectorXd& sigmas() const { return sigmas_; }

 private:
  int check(int t) const;

  Eigen::VectorXd betas_;
  Eigen::VectorXd alpha_bars_;
  Eigen::VectorXd sigmas_;
};

// Linearly spaced betas from beta_min (t = 1) to beta_max (t = T).
NoiseSchedule linear_schedule(int steps, double beta_min, double beta_max);

// T = 1000, beta in [1e-4, 0.02].
NoiseSchedule default_schedule();

// eps_hat(x_t, t): estimate of the standard Gaussian noise in latent x_t.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;

  virtual ImageTensor predict(const ImageTensor& x_t, int t) const = 0;

  // Marginal log-density of x_t at step t, when the prior has one.
  virtual std::optional<double> log_density(const ImageTensor& /*x_t*/,
                                            int /*t*/) const {
    return std::nullopt;
  }

  virtual std::string name() const = 0;
};

enum class SamplerMode { kDdim, kDdpm };

const char* sampler_name(SamplerMode mode);
SamplerMode parse_sampler(const std::string& name);

// sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
ImageTensor forward_diffuse(const ImageTensor& x0, int t,
                            const NoiseSchedule& sched, RngSeed seed);

// Smallest t with sigma_t > sigma_hat.
int match_markov_state(double sigma_hat, const NoiseSchedule& sched);

// (lambda x_priv) / sqrt(1 + sigma_{t_start}^2).
ImageTensor reparameterize(const PrivatizedObservation& obs, int t_start,
                           const NoiseSchedule& sched,
                           std::optional<double> lambda = std::nullopt);

// Deterministic DDIM update from step t to step t_prev (< t).
ImageTensor ddim_step(const ImageTensor& x_t, int t, const NoiseSchedule& sched,
                      const NoisePredictor& predictor, int t_prev);

inline ImageTensor ddim_step(const ImageTensor& x_t, int t,
                             const NoiseSchedule& sched,
                             const NoisePredictor& predictor) {
  return ddim_step(x_t, t, sched, predictor, t - 1);
}

// Ancestral DDPM update from t to t - 1. No noise is injected at t = 1.
ImageTensor ddpm_step(const ImageTensor& x_t, int t, const NoiseSchedule& sched,
                      const NoisePredictor& predictor, RngSeed seed);

// Posterior variance beta_t (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t).
double ddpm_posterior_variance(int t, const NoiseSchedule& sched);

struct ReconstructOptions {
  // DDIM only: jump `stride` steps at a time. 1 walks every state.
  int stride = 1;
  // Replaces the observation's clipping factor (approximated lambda, or 1 to
  // disable rescaling when the signal is already at scale).
  std::optional<double> lambda;
  // Replaces C * sigma * lambda as the noise level used for matching.
  std::optional<double> sigma_hat;
};

struct ReconstructionResult {
  ImageTensor image;
  // 0 with num_steps = 0 when the noise is below sigma_1 and no denoising ran.
  int t_start = 0;
  double lambda_used = 1.0;
  int num_steps = 0;
  SamplerMode mode = SamplerMode::kDdim;
};

ReconstructionResult reconstruct(const PrivatizedObservation& obs,
                                 const NoiseSchedule& sched,
                                 const NoisePredictor& predictor,
                                 SamplerMode mode, RngSeed seed,
                                 const ReconstructOptions& options = {});

struct ConsensusResult {
  ImageTensor consensus;
  SimilarityScore mean_pairwise;
  std::vector<ImageTensor> samples;
};

// k stochastic (DDPM) reconstructions, their mean pairwise similarity and the
// per-pixel median image.
ConsensusResult consensus_reconstruct(const PrivatizedObservation& obs,
                                      const NoiseSchedule& sched,
                                      const NoisePredictor& predictor, int k,
                                      RngSeed seed, Metric metric,
                                      const ReconstructOptions& options = {});

// Same, with one explicit seed per sample.
ConsensusResult consensus_reconstruct(const PrivatizedObservation& obs,
                                      const NoiseSchedule& sched,
                                      const NoisePredictor& predictor,
                                      std::span<const RngSeed> seeds,
                                      Metric metric,
                                      const ReconstructOptions& options = {});

ImageTensor pixelwise_median(std::span<const ImageTensor> images);

}  // namespace privrecon
