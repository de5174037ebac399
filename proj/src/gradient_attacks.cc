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

#include "privrecon/gradient_attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "privrecon/baselines.hpp"

namespace privrecon {

void ImprintLayerConfig::validate() const {
  if (num_bins < 1) throw ArgumentError("imprint layer needs >= 1 bin");
  if (static_cast<int>(cutoffs.size()) != num_bins) {
    throw ArgumentError("imprint layer needs one cutoff per bin");
  }
  for (std::size_t i = 1; i < cutoffs.size(); ++i) {
    if (!(cutoffs[i] > cutoffs[i - 1])) {
      throw ArgumentError("imprint cutoffs must be strictly increasing");
    }
  }
  if (measurement.size() == 0 ||
      std::abs(measurement.norm() - 1.0) > 1e-9) {
    throw ArgumentError("imprint measurement vector must have unit norm");
  }
  if (!(decoy_norm >= 0.0)) throw ArgumentError("decoy norm must be >= 0");
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ArgumentError("quantile level in (0, 1)");
  // Newton on Phi(z) = p, kept inside a shrinking bisection bracket.
  double lo = -40.0, hi = 40.0, z = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    (cdf < p ? lo : hi) = z;
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    double next = pdf > 0.0 ? z - (cdf - p) / pdf : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - z) < 1e-14) return next;
    z = next;
  }
  return z;
}

ImprintLayerConfig make_imprint_config(const std::vector<ImageTensor>& reference,
                                       int num_bins, double decoy_norm) {
  if (reference.size() < 2) {
    throw ArgumentError("imprint cutoffs need at least two reference images");
  }
  if (num_bins < 1) throw ArgumentError("imprint layer needs >= 1 bin");
  const Index d = reference.front().size();
  ImprintLayerConfig cfg;
  cfg.num_bins = num_bins;
  cfg.decoy_norm = decoy_norm;
  cfg.measurement =
      Eigen::VectorXd::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  Eigen::VectorXd proj(static_cast<Index>(reference.size()));
  for (std::size_t i = 0; i < reference.size(); ++i) {
    require_same_shape(reference[i], reference.front(), "imprint reference");
    proj[static_cast<Index>(i)] = cfg.measurement.dot(reference[i].data());
  }
  const double mean = proj.mean();
  const double sd = std::sqrt((proj.array() - mean).square().sum() /
                              static_cast<double>(proj.size() - 1));
  for (int i = 1; i <= num_bins; ++i) {
    cfg.cutoffs.push_back(mean + sd * normal_quantile(i / (num_bins + 1.0)));
  }
  cfg.validate();
  return cfg;
}

int bin_of(double projection, const ImprintLayerConfig& cfg) {
  // Cutoffs are sorted: count how many lie strictly below the projection.
  const auto it = std::lower_bound(cfg.cutoffs.begin(), cfg.cutoffs.end(),
                                   projection);
  return static_cast<int>(it - cfg.cutoffs.begin()) - 1;
}

std::vector<int> bin_occupancy(const std::vector<ImageTensor>& batch,
                               const ImprintLayerConfig& cfg) {
  std::vector<int> counts(cfg.num_bins, 0);
  for (const auto& x : batch) {
    const int b = bin_of(cfg.measurement.dot(x.data()), cfg);
    if (b >= 0) ++counts[b];
  }
  return counts;
}

AccumulatedGradient imprint_gradients(const std::vector<ImageTensor>& batch,
                                      const ImprintLayerConfig& cfg,
                                      const PrivacyParams& params,
                                      RngSeed seed) {
  cfg.validate();
  params.validate();
  if (batch.empty()) throw ArgumentError("imprint needs a nonempty batch");
  const Index d = cfg.dimension();
  const int m = cfg.num_bins;
  AccumulatedGradient g;
  g.weight_grads = Eigen::MatrixXd::Zero(m, d);
  g.bias_grads = Eigen::VectorXd::Zero(m);
  g.params = params;
  g.batch_size = static_cast<int>(batch.size());
  g.shape = batch.front().shape();
  for (const auto& x : batch) {
    require_same_shape(x, batch.front(), "imprint batch");
    if (x.size() != d) {
      throw DimensionError("imprint layer dimension " + std::to_string(d) +
                           " does not match image " + x.shape().to_string());
    }
    const int active = bin_of(cfg.measurement.dot(x.data()), cfg) + 1;
    const double norm2 = active * (x.data().squaredNorm() + 1.0) +
                         cfg.decoy_norm * cfg.decoy_norm;
    const double scale = 1.0 / std::max(std::sqrt(norm2) / params.clip_norm,
                                        1.0);
    for (int i = 0; i < active; ++i) {
      g.weight_grads.row(i) += scale * x.data().transpose();
      g.bias_grads[i] += scale;
    }
  }
  if (params.noise_multiplier > 0.0) {
    Rng rng(seed);
    const double s = params.noise_std();
    for (Index i = 0; i < g.weight_grads.size(); ++i) {
      g.weight_grads.data()[i] += s * rng.normal();
    }
    for (Index i = 0; i < m; ++i) g.bias_grads[i] += s * rng.normal();
  }
  return g;
}

const char* bin_status_name(BinStatus s) {
  switch (s) {
    case BinStatus::kRecovered:
      return "recovered";
    case BinStatus::kEmpty:
      return "empty";
    case BinStatus::kCollision:
      return "collision";
  }
  return "unknown";
}

std::vector<BinDifference> bin_differences(const AccumulatedGradient& g) {
  const Index m = g.bias_grads.size();
  std::vector<BinDifference> out(m);
  for (Index i = 0; i < m; ++i) {
    if (i + 1 < m) {
      out[i].weight = (g.weight_grads.row(i) - g.weight_grads.row(i + 1))
                          .transpose();
      out[i].bias = g.bias_grads[i] - g.bias_grads[i + 1];
    } else {
      out[i].weight = g.weight_grads.row(i).transpose();
      out[i].bias = g.bias_grads[i];
    }
  }
  return out;
}

std::vector<BinReconstruction> invert_bins(
    const AccumulatedGradient& g, const ImprintLayerConfig& cfg,
    const std::optional<std::vector<int>>& occupancy) {
  if (g.weight_grads.rows() != cfg.num_bins ||
      g.weight_grads.cols() != cfg.dimension() ||
      g.bias_grads.size() != cfg.num_bins) {
    throw DimensionError("accumulated gradient does not match imprint layer");
  }
  if (occupancy && static_cast<int>(occupancy->size()) != cfg.num_bins) {
    throw DimensionError("occupancy table does not match bin count");
  }
  const double threshold = std::max(4.0 * g.params.noise_std(), 1e-12);
  const auto diffs = bin_differences(g);
  std::vector<BinReconstruction> out;
  out.reserve(diffs.size());
  for (int i = 0; i < cfg.num_bins; ++i) {
    BinReconstruction r;
    r.bin_index = i;
    if (std::abs(diffs[i].bias) <= threshold) {
      r.status = BinStatus::kEmpty;
    } else if (occupancy && (*occupancy)[i] >= 2) {
      r.status = BinStatus::kCollision;
    } else {
      r.status = BinStatus::kRecovered;
      r.image = ImageTensor(g.shape, diffs[i].weight / diffs[i].bias);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<BinReconstruction> attack_batch(
    const std::vector<ImageTensor>& batch, const ImprintLayerConfig& cfg,
    const PrivacyParams& params, RngSeed seed, const NoiseSchedule& sched,
    const NoisePredictor& predictor, const BatchAttackOptions& options) {
  const AccumulatedGradient g =
      imprint_gradients(batch, cfg, params, derive_seed(seed, 0));
  std::optional<std::vector<int>> occupancy;
  if (options.ground_truth_occupancy) occupancy = bin_occupancy(batch, cfg);
  auto bins = invert_bins(g, cfg, occupancy);
  // Noise-free releases need no denoising.
  if (params.noise_multiplier == 0.0) return bins;
  for (auto& bin : bins) {
    if (bin.status != BinStatus::kRecovered) continue;
    const double sigma_hat = estimate_noise_sigma(*bin.image).sigma_hat;
    PrivatizedObservation obs{*bin.image, params, 1.0};
    ReconstructOptions ro;
    ro.lambda = 1.0;
    ro.sigma_hat = sigma_hat;
    try {
      bin.image = reconstruct(obs, sched, predictor, options.mode,
                              derive_seed(seed, 1 + bin.bin_index), ro)
                      .image;
    } catch (const ScheduleOverflowError&) {
      bin.image.reset();
      bin.status = BinStatus::kEmpty;
    }
  }
  return bins;
}

}  // namespace privrecon
