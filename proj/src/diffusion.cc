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

#include "privrecon/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace privrecon {

NoiseSchedule::NoiseSchedule(const std::vector<double>& betas) {
  if (betas.empty()) throw ArgumentError("schedule needs at least one step");
  const Index n = static_cast<Index>(betas.size());
  betas_.resize(n + 1);
  alpha_bars_.resize(n + 1);
  sigmas_.resize(n + 1);
  betas_[0] = 0.0;
  alpha_bars_[0] = 1.0;
  sigmas_[0] = 0.0;
  for (Index t = 1; t <= n; ++t) {
    const double b = betas[t - 1];
    if (!(b > 0.0 && b < 1.0)) {
      throw ArgumentError("schedule betas must lie in (0, 1)");
    }
    betas_[t] = b;
    alpha_bars_[t] = alpha_bars_[t - 1] * (1.0 - b);
    sigmas_[t] = std::sqrt(1.0 / alpha_bars_[t] - 1.0);
  }
}

int NoiseSchedule::check(int t) const {
  if (t < 0 || t > steps()) {
    throw ArgumentError("step " + std::to_string(t) + " outside [0, " +
                        std::to_string(steps()) + "]");
  }
  return t;
}

NoiseSchedule linear_schedule(int steps, double beta_min, double beta_max) {
  if (steps < 2) throw ArgumentError("linear schedule needs T >= 2");
  if (!(beta_min > 0.0 && beta_min < beta_max && beta_max < 1.0)) {
    throw ArgumentError("linear schedule needs 0 < beta_min < beta_max < 1");
  }
  std::vector<double> betas(steps);
  for (int i = 0; i < steps; ++i) {
    betas[i] = beta_min + (beta_max - beta_min) * i / (steps - 1);
  }
  return NoiseSchedule(betas);
}

NoiseSchedule default_schedule() { return linear_schedule(1000, 1e-4, 0.02); }

const char* sampler_name(SamplerMode mode) {
  return mode == SamplerMode::kDdim ? "ddim" : "ddpm";
}

SamplerMode parse_sampler(const std::string& name) {
  if (name == "ddim" || name == "DDIM") return SamplerMode::kDdim;
  if (name == "ddpm" || name == "DDPM") return SamplerMode::kDdpm;
  throw ArgumentError("unknown sampler '" + name + "'");
}

namespace {

void require_step(int t, const NoiseSchedule& sched) {
  if (t < 1 || t > sched.steps()) {
    throw ArgumentError("step " + std::to_string(t) + " outside [1, " +
                        std::to_string(sched.steps()) + "]");
  }
}

}  // namespace

ImageTensor forward_diffuse(const ImageTensor& x0, int t,
                            const NoiseSchedule& sched, RngSeed seed) {
  require_step(t, sched);
  Rng rng(seed);
  const double ab = sched.alpha_bar(t);
  return ImageTensor(x0.shape(), std::sqrt(ab) * x0.data() +
                                     std::sqrt(1.0 - ab) *
                                         rng.normal_vector(x0.size()));
}

int match_markov_state(double sigma_hat, const NoiseSchedule& sched) {
  if (!(sigma_hat >= 0.0)) {
    throw ArgumentError("noise level must be nonnegative");
  }
  if (sigma_hat >= sched.max_sigma()) {
    throw ScheduleOverflowError(
        "noise level " + std::to_string(sigma_hat) +
        " exceeds the maximal schedule noise " +
        std::to_string(sched.max_sigma()));
  }
  // sigmas are strictly increasing, so the first t with sigma_t > sigma_hat
  // is an upper bound search over indices 1..T.
  const auto& s = sched.sigmas();
  const double* first = s.data() + 1;
  const double* last = s.data() + s.size();
  return static_cast<int>(std::upper_bound(first, last, sigma_hat) - s.data());
}

ImageTensor reparameterize(const PrivatizedObservation& obs, int t_start,
                           const NoiseSchedule& sched,
                           std::optional<double> lambda) {
  require_step(t_start, sched);
  const double s = sched.sigma(t_start);
  const ImageTensor scaled = rescaled_observation(obs, lambda);
  return ImageTensor(scaled.shape(), scaled.data() / std::sqrt(1.0 + s * s));
}

ImageTensor ddim_step(const ImageTensor& x_t, int t, const NoiseSchedule& sched,
                      const NoisePredictor& predictor, int t_prev) {
  require_step(t, sched);
  if (t_prev < 0 || t_prev >= t) {
    throw ArgumentError("ddim target step must lie in [0, t)");
  }
  const ImageTensor eps = predictor.predict(x_t, t);
  require_same_shape(eps, x_t, "ddim_step");
  const double ab = sched.alpha_bar(t);
  const double ab_prev = sched.alpha_bar(t_prev);
  const Eigen::VectorXd x0 =
      (x_t.data() - std::sqrt(1.0 - ab) * eps.data()) / std::sqrt(ab);
  return ImageTensor(x_t.shape(), std::sqrt(ab_prev) * x0 +
                                      std::sqrt(1.0 - ab_prev) * eps.data());
}

double ddpm_posterior_variance(int t, const NoiseSchedule& sched) {
  require_step(t, sched);
  return sched.beta(t) * (1.0 - sched.alpha_bar(t - 1)) /
         (1.0 - sched.alpha_bar(t));
}

ImageTensor ddpm_step(const ImageTensor& x_t, int t, const NoiseSchedule& sched,
                      const NoisePredictor& predictor, RngSeed seed) {
  require_step(t, sched);
  const ImageTensor eps = predictor.predict(x_t, t);
  require_same_shape(eps, x_t, "ddpm_step");
  const double beta = sched.beta(t);
  Eigen::VectorXd mean =
      (x_t.data() - beta / std::sqrt(1.0 - sched.alpha_bar(t)) * eps.data()) /
      std::sqrt(sched.alpha(t));
  if (t > 1) {
    Rng rng(seed);
    mean += std::sqrt(ddpm_posterior_variance(t, sched)) *
            rng.normal_vector(x_t.size());
  }
  return ImageTensor(x_t.shape(), std::move(mean));
}

ReconstructionResult reconstruct(const PrivatizedObservation& obs,
                                 const NoiseSchedule& sched,
                                 const NoisePredictor& predictor,
                                 SamplerMode mode, RngSeed seed,
                                 const ReconstructOptions& options) {
  obs.params.validate();
  if (options.stride < 1) throw ArgumentError("stride must be >= 1");
  if (mode == SamplerMode::kDdpm && options.stride != 1) {
    throw ArgumentError("strided sampling is only defined for DDIM");
  }
  const double lambda =
      options.lambda ? *options.lambda
                     : (obs.lambda ? *obs.lambda
                                   : throw MissingKnowledgeError(
                                         "clipping factor unknown: supply an "
                                         "approximation"));
  if (!(lambda > 0.0)) throw ArgumentError("lambda must be positive");
  const double sigma_hat =
      options.sigma_hat ? *options.sigma_hat : obs.noise_std() * lambda;

  ReconstructionResult result;
  result.lambda_used = lambda;
  result.mode = mode;
  if (sigma_hat < sched.sigma(1)) {
    result.image = rescaled_observation(obs, lambda);
    return result;
  }

  const int t_start = match_markov_state(sigma_hat, sched);
  ImageTensor x = reparameterize(obs, t_start, sched, lambda);
  int steps = 0;
  for (int t = t_start; t >= 1;) {
    if (mode == SamplerMode::kDdim) {
      const int t_prev = std::max(t - options.stride, 0);
      x = ddim_step(x, t, sched, predictor, t_prev);
      t = t_prev;
    } else {
      x = ddpm_step(x, t, sched, predictor,
                    derive_seed(seed, static_cast<std::uint64_t>(t)));
      --t;
    }
    ++steps;
  }
  result.image = std::move(x);
  result.t_start = t_start;
  result.num_steps = steps;
  return result;
}

ImageTensor pixelwise_median(std::span<const ImageTensor> images) {
  if (images.empty()) throw ArgumentError("median of an empty image set");
  const ImageTensor& first = images.front();
  for (const auto& img : images) require_same_shape(img, first, "median");
  Eigen::VectorXd out(first.size());
  std::vector<double> column(images.size());
  for (Index i = 0; i < first.size(); ++i) {
    for (std::size_t k = 0; k < images.size(); ++k) {
      column[k] = images[k].data()[i];
    }
    std::sort(column.begin(), column.end());
    const std::size_t n = column.size();
    out[i] = n % 2 == 1 ? column[n / 2]
                        : 0.5 * (column[n / 2 - 1] + column[n / 2]);
  }
  return ImageTensor(first.shape(), std::move(out));
}

ConsensusResult consensus_reconstruct(const PrivatizedObservation& obs,
                                      const NoiseSchedule& sched,
                                      const NoisePredictor& predictor,
                                      std::span<const RngSeed> seeds,
                                      Metric metric,
                                      const ReconstructOptions& options) {
  if (seeds.size() < 2) {
    throw ArgumentError("consensus needs at least two samples");
  }
  ConsensusResult out;
  out.samples.reserve(seeds.size());
  for (const RngSeed s : seeds) {
    out.samples.push_back(
        reconstruct(obs, sched, predictor, SamplerMode::kDdpm, s, options)
            .image);
  }
  out.mean_pairwise = {metric, pairwise_baseline(out.samples, metric)};
  out.consensus = pixelwise_median(out.samples);
  return out;
}

ConsensusResult consensus_reconstruct(const PrivatizedObservation& obs,
                                      const NoiseSchedule& sched,
                                      const NoisePredictor& predictor, int k,
                                      RngSeed seed, Metric metric,
                                      const ReconstructOptions& options) {
  if (k < 2) throw ArgumentError("consensus needs k >= 2");
  std::vector<RngSeed> seeds;
  for (int i = 0; i < k; ++i) {
    seeds.push_back(derive_seed(seed, static_cast<std::uint64_t>(i)));
  }
  return consensus_reconstruct(obs, sched, predictor, seeds, metric, options);
}

}  // namespace privrecon
