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

#include <string>
#include <vector>

#include <Eigen/Core>

#include "privrecon/diffusion.hpp"
#include "privrecon/priors.hpp"

namespace privrecon {

struct ToyTrainConfig {
  int hidden = 64;
  int steps = 3000;
  int batch_size = 64;
  double learning_rate = 2e-3;
  int dataset_size = 2000;  // images drawn by train_toy_denoiser(spec, ...)
  RngSeed seed{0};
};

// Fully connected eps-predictor with two tanh hidden layers. Input is the
// latent concatenated with a width-16 sinusoidal embedding of t; a linear
// skip path maps the latent straight to the output.
class ToyDenoiser final : public NoisePredictor {
 public:
  static constexpr int kTimeEmbedding = 16;

  struct Parameters {
    Eigen::MatrixXd w1, w2, w3, skip;
    Eigen::VectorXd b1, b2, b3;
  };

  ToyDenoiser(ImageShape shape, int hidden, RngSeed init_seed);
  ToyDenoiser(ImageShape shape, Parameters params);

  ImageTensor predict(const ImageTensor& x_t, int t) const override;
  std::string name() const override { return "toy-denoiser"; }

  // Columns of `x` are latents; returns predicted noise per column.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x,
                          const std::vector<int>& steps) const;

  const ImageShape& shape() const { return shape_; }
  int hidden() const { return static_cast<int>(params_.b1.size()); }
  const Parameters& parameters() const { return params_; }

  // Loss after each optimisation step of the run that produced this model.
  std::vector<double> loss_history;

  friend ToyDenoiser train_toy_denoiser(const std::vector<ImageTensor>&,
                                        const NoiseSchedule&,
                                        const ToyTrainConfig&);

 private:
  ImageShape shape_;
  Parameters params_;
};

Eigen::VectorXd time_embedding(int t);

ToyDenoiser train_toy_denoiser(const std::vector<ImageTensor>& data,
                               const NoiseSchedule& sched,
                               const ToyTrainConfig& config);

ToyDenoiser train_toy_denoiser(const DatasetSpec& spec,
                               const NoiseSchedule& sched,
                               const ToyTrainConfig& config);

}  // namespace privrecon
