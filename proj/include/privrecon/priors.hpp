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
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "privrecon/diffusion.hpp"
#include "privrecon/image.hpp"
#include "privrecon/random.hpp"

namespace privrecon {

// Mixture of isotropic Gaussians over flattened images.
struct GmmPrior {
  struct Component {
    double weight = 0.0;
    Eigen::VectorXd mean;
    double variance = 0.0;
  };

  ImageShape shape;
  std::vector<Component> components;

  Index dimension() const { return shape.size(); }
  void validate() const;
  double log_density(const Eigen::VectorXd& x) const;
};

// Closed-form noise predictor for a GMM prior. With a = sqrt(alpha_bar_t) and
// v_i = alpha_bar_t s_i^2 + 1 - alpha_bar_t the diffused marginal is
// sum_i w_i N(a m_i, v_i I), whose score gives eps_hat exactly.
class GmmPredictor final : public NoisePredictor {
 public:
  GmmPredictor(GmmPrior prior, NoiseSchedule schedule);

  ImageTensor predict(const ImageTensor& x_t, int t) const override;
  std::optional<double> log_density(const ImageTensor& x_t,
                                    int t) const override;
  std::string name() const override { return "gmm"; }

  // grad_x log p_t(x).
  Eigen::VectorXd score(const Eigen::VectorXd& x, int t) const;
  // Posterior component probabilities at step t.
  Eigen::VectorXd responsibilities(const Eigen::VectorXd& x, int t) const;

  const GmmPrior& prior() const { return prior_; }
  const NoiseSchedule& schedule() const { return schedule_; }

 private:
  // Per-component log w_i N(x; a m_i, v_i I) and the v_i used.
  Eigen::VectorXd component_log_terms(const Eigen::VectorXd& x, int t,
                                      Eigen::VectorXd* variances) const;
  void check_dim(Index n) const;

  GmmPrior prior_;
  NoiseSchedule schedule_;
  Eigen::MatrixXd means_;  // D x K
  Eigen::VectorXd log_weights_;
  Eigen::VectorXd variances_;
};

GmmPredictor gmm_predictor(GmmPrior prior, NoiseSchedule schedule);

std::vector<ImageTensor> gmm_sample(const GmmPrior& prior, int n,
                                    RngSeed seed);

// ---------------------------------------------------------------------------
// Synthetic image families.

enum class DatasetFamily { kBlobsA, kBlobsB, kBars };

const char* family_name(DatasetFamily f);
DatasetFamily parse_family(const std::string& name);

// BlobsA: one low-contrast Gaussian bump on a gray background, centred near
// one of a 4 x 4 grid of anchors. BlobsB: anchors shifted by half a cell,
// darker background and brighter bumps (mild shift). Bars: one horizontal or
// vertical bar (severe shift).
struct DatasetSpec {
  DatasetFamily family = DatasetFamily::kBlobsA;
  ImageShape shape{8, 8, 1};
  std::uint64_t seed = 0;
  double pixel_noise = 0.01;
};

std::vector<ImageTensor> generate_dataset(const DatasetSpec& spec, int n);

// ---------------------------------------------------------------------------
// Expectation-maximisation for isotropic GMMs.

struct EmOptions {
  int max_iterations = 100;
  double tolerance = 1e-9;  // relative log-likelihood change
  double variance_floor = 1e-6;
  int train_size = 2000;    // images drawn by fit_gmm_from_dataset
};

struct GmmFit {
  GmmPrior prior;
  // Mean per-sample log-likelihood after each EM iteration.
  std::vector<double> log_likelihood;
};

GmmFit fit_gmm(const std::vector<ImageTensor>& data, int k, RngSeed seed,
               const EmOptions& options = {});

GmmFit fit_gmm_from_dataset(const DatasetSpec& spec, int k, RngSeed seed,
                            const EmOptions& options = {});

}  // namespace privrecon
