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

#include <vector>

namespace privrecon {

// DP-SGD composition parameters for converting mu into (epsilon, delta).
struct AccountantConfig {
  int steps = 1;
  double sampling_prob = 1.0;
  double delta = 1e-5;
  std::vector<int> orders = default_orders();

  static std::vector<int> default_orders();  // 2..256
  void validate() const;
};

struct EpsilonResult {
  double epsilon = 0.0;
  int best_order = 0;
};

// Per-step RDP of the Gaussian mechanism (sensitivity 1, noise sigma):
// alpha / (2 sigma^2).
double rdp_gaussian(int alpha, double sigma);

// Per-step RDP of the Poisson-subsampled Gaussian mechanism at integer order
// alpha, via the binomial expansion evaluated in log space.
double rdp_subsampled_gaussian(int alpha, double sampling_prob, double sigma);

// sigma = 1 / mu with sensitivity normalised to C.
EpsilonResult mu_to_epsilon(double mu, const AccountantConfig& cfg);

// Inverse of mu_to_epsilon by bisection on log(mu) over [1e-3, 1e4].
double epsilon_to_mu(double epsilon_target, const AccountantConfig& cfg);

}  // namespace privrecon
