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

#include "privrecon/accountant.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "privrecon/errors.hpp"

namespace privrecon {

namespace {

constexpr double kMuLo = 1e-3;
constexpr double kMuHi = 1e4;

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

std::vector<int> AccountantConfig::default_orders() {
  std::vector<int> orders;
  for (int a = 2; a <= 256; ++a) orders.push_back(a);
  return orders;
}

void AccountantConfig::validate() const {
  if (steps < 1) throw ArgumentError("accountant needs steps >= 1");
  if (!(sampling_prob > 0.0 && sampling_prob <= 1.0)) {
    throw ArgumentError("sampling probability must lie in (0, 1]");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ArgumentError("delta must lie in (0, 1)");
  }
  if (orders.empty()) throw ArgumentError("accountant needs RDP orders");
  for (int a : orders) {
    if (a < 2) throw ArgumentError("RDP orders must be integers >= 2");
  }
}

double rdp_gaussian(int alpha, double sigma) {
  return alpha / (2.0 * sigma * sigma);
}

double rdp_subsampled_gaussian(int alpha, double sampling_prob, double sigma) {
  if (alpha < 2) throw ArgumentError("RDP order must be >= 2");
  if (!(sampling_prob > 0.0 && sampling_prob <= 1.0)) {
    throw ArgumentError("sampling probability must lie in (0, 1]");
  }
  const double log_p = std::log(sampling_prob);
  const double log_q = std::log1p(-sampling_prob);  // -inf at p = 1
  double acc = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= alpha; ++k) {
    const double term =
        log_binomial(alpha, k) +
        (alpha - k == 0 ? 0.0 : (alpha - k) * log_q) + k * log_p +
        static_cast<double>(k) * (k - 1) / (2.0 * sigma * sigma);
    acc = log_add(acc, term);
  }
  return acc / (alpha - 1);
}

EpsilonResult mu_to_epsilon(double mu, const AccountantConfig& cfg) {
  cfg.validate();
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw DegenerateParameterError("mu must be positive and finite");
  }
  const double sigma = 1.0 / mu;
  const double log_inv_delta = -std::log(cfg.delta);
  EpsilonResult best{std::numeric_limits<double>::infinity(), 0};
  for (const int alpha : cfg.orders) {
    const double rdp = cfg.sampling_prob == 1.0
                           ? rdp_gaussian(alpha, sigma)
                           : rdp_subsampled_gaussian(alpha, cfg.sampling_prob,
                                                     sigma);
    const double eps = cfg.steps * rdp + log_inv_delta / (alpha - 1);
    if (std::isfinite(eps) && eps < best.epsilon) best = {eps, alpha};
  }
  if (!std::isfinite(best.epsilon)) {
    throw AccountantOverflowError(
        "no RDP order gives a finite epsilon for mu = " + std::to_string(mu) +
        ", T = " + std::to_string(cfg.steps) +
        ", p = " + std::to_string(cfg.sampling_prob));
  }
  return best;
}

double epsilon_to_mu(double epsilon_target, const AccountantConfig& cfg) {
  if (!(epsilon_target > 0.0) || !std::isfinite(epsilon_target)) {
    throw ArgumentError("epsilon target must be positive and finite");
  }
  const double eps_lo = mu_to_epsilon(kMuLo, cfg).epsilon;
  const double eps_hi = mu_to_epsilon(kMuHi, cfg).epsilon;
  if (epsilon_target < eps_lo || epsilon_target > eps_hi) {
    throw EpsilonRangeError("epsilon " + std::to_string(epsilon_target) +
                            " is outside the reachable range [" +
                            std::to_string(eps_lo) + ", " +
                            std::to_string(eps_hi) + "]");
  }
  double lo = std::log(kMuLo), hi = std::log(kMuHi);
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double eps = mu_to_epsilon(std::exp(mid), cfg).epsilon;
    if (std::abs(eps - epsilon_target) <= 1e-12 * epsilon_target) {
      return std::exp(mid);
    }
    (eps < epsilon_target ? lo : hi) = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

}  // namespace privrecon
