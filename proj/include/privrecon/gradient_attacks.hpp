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

#include <Eigen/Core>

#include "privrecon/diffusion.hpp"
#include "privrecon/dp_release.hpp"
#include "privrecon/image.hpp"

namespace privrecon {

// Imprint layer: row i fires for a sample x iff <h, x> > cutoff_i, with unit
// upstream error, so adjacent-row differences isolate the samples whose
// projection falls between two cutoffs.
struct ImprintLayerConfig {
  int num_bins = 128;
  Eigen::VectorXd measurement;  // unit norm, length D
  std::vector<double> cutoffs;  // strictly increasing, length num_bins
  // Norm of the rest of the network's per-sample gradient. It never reaches
  // the observer but shares the clipping budget.
  double decoy_norm = 0.0;

  Index dimension() const { return measurement.size(); }
  void validate() const;
};

// h = normalised all-ones vector; cutoffs are Gaussian quantiles at levels
// i / (m + 1) of the projections of `reference`.
ImprintLayerConfig make_imprint_config(const std::vector<ImageTensor>& reference,
                                       int num_bins = 128,
                                       double decoy_norm = 0.0);

// Standard normal quantile.
double normal_quantile(double p);

struct AccumulatedGradient {
  Eigen::MatrixXd weight_grads;  // m x D
  Eigen::VectorXd bias_grads;    // m
  PrivacyParams params;
  int batch_size = 0;
  ImageShape shape;
};

// Bin of a single projection: the largest i with s > cutoff_i, or -1 when the
// sample activates no row.
int bin_of(double projection, const ImprintLayerConfig& cfg);

// Samples per bin, from the projections.
std::vector<int> bin_occupancy(const std::vector<ImageTensor>& batch,
                               const ImprintLayerConfig& cfg);

AccumulatedGradient imprint_gradients(const std::vector<ImageTensor>& batch,
                                      const ImprintLayerConfig& cfg,
                                      const PrivacyParams& params,
                                      RngSeed seed);

enum class BinStatus { kRecovered, kEmpty, kCollision };

const char* bin_status_name(BinStatus s);

struct BinReconstruction {
  int bin_index = 0;
  std::optional<ImageTensor> image;
  BinStatus status = BinStatus::kEmpty;
};

struct BinDifference {
  Eigen::VectorXd weight;
  double bias = 0.0;
};

// Row differences (row i minus row i + 1; the last bin uses its row alone).
std::vector<BinDifference> bin_differences(const AccumulatedGradient& g);

// Divides weight by bias differences per bin. Bins with |delta b| at most
// 4 C sigma are Empty. `occupancy`, when the generator's ground truth is
// available, flags bins with two or more samples as Collision; without it
// collisions go undetected.
std::vector<BinReconstruction> invert_bins(
    const AccumulatedGradient& g, const ImprintLayerConfig& cfg,
    const std::optional<std::vector<int>>& occupancy = std::nullopt);

struct BatchAttackOptions {
  SamplerMode mode = SamplerMode::kDdim;
  // Use the generator's occupancy to flag collisions.
  bool ground_truth_occupancy = true;
};

// Imprint, invert, estimate each recovered bin's noise level and denoise it
// with the diffusion reconstruction (no lambda rescaling: division already
// restored the scale).
std::vector<BinReconstruction> attack_batch(
    const std::vector<ImageTensor>& batch, const ImprintLayerConfig& cfg,
    const PrivacyParams& params, RngSeed seed, const NoiseSchedule& sched,
    const NoisePredictor& predictor, const BatchAttackOptions& options = {});

}  // namespace privrecon
