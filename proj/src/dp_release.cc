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

#include "privrecon/dp_release.hpp"

#include <cmath>
#include <string>

namespace privrecon {

PrivacyParams PrivacyParams::from_mu(double mu, double clip_norm) {
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw ArgumentError("mu must be positive and finite");
  }
  PrivacyParams p{clip_norm, clip_norm / mu};
  p.validate();
  return p;
}

double PrivacyParams::mu() const {
  if (noise_multiplier == 0.0) {
    throw DegenerateParameterError("mu = C / sigma is undefined for sigma = 0");
  }
  return clip_norm / noise_multiplier;
}

void PrivacyParams::validate() const {
  if (!(clip_norm > 0.0) || !std::isfinite(clip_norm)) {
    throw ArgumentError("clip norm must be positive, got " +
                        std::to_string(clip_norm));
  }
  if (!(noise_multiplier >= 0.0) || !std::isfinite(noise_multiplier)) {
    throw ArgumentError("noise multiplier must be nonnegative, got " +
                        std::to_string(noise_multiplier));
  }
}

double clip_factor(const ImageTensor& x, double clip_norm) {
  if (!(clip_norm > 0.0)) throw ArgumentError("clip norm must be positive");
  return std::max(x.norm() / clip_norm, 1.0);
}

PrivatizedObservation privatize_with_noise(const ImageTensor& x,
                                           const PrivacyParams& params,
                                           const Eigen::VectorXd& unit_noise) {
  params.validate();
  require_clean(x, "privatize");
  if (unit_noise.size() != x.size()) {
    throw DimensionError("privatize: noise length does not match image");
  }
  const double lambda = clip_factor(x, params.clip_norm);
  Eigen::VectorXd out = x.data() / lambda;
  if (params.noise_multiplier > 0.0) out += params.noise_std() * unit_noise;
  return PrivatizedObservation{ImageTensor(x.shape(), std::move(out)), params,
                               lambda};
}

PrivatizedObservation privatize(const ImageTensor& x,
                                const PrivacyParams& params, RngSeed seed) {
  Rng rng(seed);
  return privatize_with_noise(x, params, rng.normal_vector(x.size()));
}

namespace {

double lambda_or_throw(const PrivatizedObservation& obs,
                       std::optional<double> lambda) {
  if (lambda) return *lambda;
  if (obs.lambda) return *obs.lambda;
  throw MissingKnowledgeError(
      "clipping factor unknown: supply an approximation");
}

}  // namespace

ImageTensor rescaled_observation(const PrivatizedObservation& obs,
                                 std::optional<double> lambda) {
  const double l = lambda_or_throw(obs, lambda);
  return ImageTensor(obs.x_priv.shape(), l * obs.x_priv.data());
}

double rescaled_noise_std(const PrivatizedObservation& obs,
                          std::optional<double> lambda) {
  return lambda_or_throw(obs, lambda) * obs.noise_std();
}

double release_mse_bound(const PrivacyParams& params) {
  params.validate();
  if (params.noise_multiplier == 0.0) {
    throw DegenerateParameterError("MSE bound is degenerate for sigma = 0");
  }
  return params.noise_std() * params.noise_std();
}

}  // namespace privrecon
