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

#include "privrecon/image.hpp"
#include "privrecon/random.hpp"

namespace privrecon {

// DP-SGD clipping norm C and noise multiplier sigma. mu = C / sigma is the
// signal-to-noise parameter that the attack results are reported against.
struct PrivacyParams {
  double clip_norm = 1.0;
  double noise_multiplier = 0.0;

  static PrivacyParams from_mu(double mu, double clip_norm = 1.0);

  // Throws DegenerateParameterError when sigma == 0.
  double mu() const;
  // Per-coordinate standard deviation C * sigma of the DP-SGD noise.
  double noise_std() const { return clip_norm * noise_multiplier; }
  void validate() const;
};

// Image-space DP-SGD release x_priv = x / lambda + xi, xi ~ N(0, C^2 sigma^2).
// `lambda` is present only when the adversary is assumed to know it.
struct PrivatizedObservation {
  ImageTensor x_priv;
  PrivacyParams params;
  std::optional<double> lambda;

  double noise_std() const { return params.noise_std(); }
};

// max(||x||_2 / C, 1).
double clip_factor(const ImageTensor& x, double clip_norm);

PrivatizedObservation privatize(const ImageTensor& x,
                                const PrivacyParams& params, RngSeed seed);

// Same as privatize() but with a caller-supplied standard-normal draw, so a
// sweep can reuse one noise realisation across privacy levels.
PrivatizedObservation privatize_with_noise(const ImageTensor& x,
                                           const PrivacyParams& params,
                                           const Eigen::VectorXd& unit_noise);

// lambda * x_priv = x + lambda * xi. Requires a known (or supplied) lambda.
ImageTensor rescaled_observation(const PrivatizedObservation& obs,
                                 std::optional<double> lambda = std::nullopt);

// Noise std of the rescaled observation: C * sigma * lambda.
double rescaled_noise_std(const PrivatizedObservation& obs,
                          std::optional<double> lambda = std::nullopt);

// Lower bound C^2 sigma^2 on the expected MSE of the uninformed attack.
double release_mse_bound(const PrivacyParams& params);

}  // namespace privrecon
