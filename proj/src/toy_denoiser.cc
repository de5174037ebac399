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

#include "privrecon/toy_denoiser.hpp"

#include <cmath>

namespace privrecon {

Eigen::VectorXd time_embedding(int t) {
  constexpr int half = ToyDenoiser::kTimeEmbedding / 2;
  Eigen::VectorXd e(ToyDenoiser::kTimeEmbedding);
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    e[2 * i] = std::sin(t * freq);
    e[2 * i + 1] = std::cos(t * freq);
  }
  return e;
}

ToyDenoiser::ToyDenoiser(ImageShape shape, int hidden, RngSeed init_seed)
    : shape_(shape) {
  validate_shape(shape_);
  if (hidden < 1) throw ArgumentError("hidden width must be positive");
  const Index d = shape_.size();
  const Index in = d + kTimeEmbedding;
  Rng rng(init_seed);
  auto glorot = [&rng](Index rows, Index cols) {
    const double s = std::sqrt(2.0 / static_cast<double>(rows + cols));
    Eigen::MatrixXd m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = s * rng.normal();
    return m;
  };
  params_.w1 = glorot(hidden, in);
  params_.b1 = Eigen::VectorXd::Zero(hidden);
  params_.w2 = glorot(hidden, hidden);
  params_.b2 = Eigen::VectorXd::Zero(hidden);
  params_.w3 = glorot(d, hidden);
  params_.b3 = Eigen::VectorXd::Zero(d);
  params_.skip = Eigen::MatrixXd::Zero(d, d);
}

ToyDenoiser::ToyDenoiser(ImageShape shape, Parameters params)
    : shape_(shape), params_(std::move(params)) {
  validate_shape(shape_);
  const Index d = shape_.size();
  const Index h = params_.b1.size();
  if (params_.w1.rows() != h || params_.w1.cols() != d + kTimeEmbedding ||
      params_.w2.rows() != h || params_.w2.cols() != h ||
      params_.b2.size() != h || params_.w3.rows() != d ||
      params_.w3.cols() != h || params_.b3.size() != d ||
      params_.skip.rows() != d || params_.skip.cols() != d) {
    throw DimensionError("toy denoiser parameters do not match shape " +
                         shape_.to_string());
  }
}

namespace {

Eigen::MatrixXd embed_inputs(const Eigen::MatrixXd& x,
                             const std::vector<int>& steps) {
  Eigen::MatrixXd in(x.rows() + ToyDenoiser::kTimeEmbedding, x.cols());
  in.topRows(x.rows()) = x;
  for (Index j = 0; j < x.cols(); ++j) {
    in.bottomRows(ToyDenoiser::kTimeEmbedding).col(j) =
        time_embedding(steps[j]);
  }
  return in;
}

}  // namespace

Eigen::MatrixXd ToyDenoiser::forward(const Eigen::MatrixXd& x,
                                     const std::vector<int>& steps) const {
  if (x.rows() != shape_.size() ||
      static_cast<std::size_t>(x.cols()) != steps.size()) {
    throw DimensionError("toy denoiser input shape");
  }
  const Eigen::MatrixXd in = embed_inputs(x, steps);
  const Eigen::MatrixXd h1 =
      ((params_.w1 * in).colwise() + params_.b1).array().tanh();
  const Eigen::MatrixXd h2 =
      ((params_.w2 * h1).colwise() + params_.b2).array().tanh();
  return ((params_.w3 * h2).colwise() + params_.b3) + params_.skip * x;
}

ImageTensor ToyDenoiser::predict(const ImageTensor& x_t, int t) const {
  if (x_t.shape() != shape_) {
    throw DimensionError("toy denoiser expects " + shape_.to_string());
  }
  return ImageTensor(shape_, forward(x_t.data(), {t}).col(0));
}

namespace {

struct Adam {
  double lr;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int step = 0;

  template <typename P>
  void update(P& param, const P& grad, P& m, P& v) const {
    m = beta1 * m + (1 - beta1) * grad;
    v = beta2 * v + (1 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1 - std::pow(beta1, step);
    const double c2 = 1 - std::pow(beta2, step);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

}  // namespace

ToyDenoiser train_toy_denoiser(const std::vector<ImageTensor>& data,
                               const NoiseSchedule& sched,
                               const ToyTrainConfig& config) {
  if (data.empty()) throw ArgumentError("toy denoiser needs training data");
  if (config.batch_size < 1 || config.steps < 1) {
    throw ArgumentError("toy denoiser needs positive steps and batch size");
  }
  const ImageShape shape = data.front().shape();
  const Index d = shape.size();
  ToyDenoiser model(shape, config.hidden, derive_seed(config.seed, 0));
  auto& p = model.params_;
  ToyDenoiser::Parameters m{
      Eigen::MatrixXd::Zero(p.w1.rows(), p.w1.cols()),
      Eigen::MatrixXd::Zero(p.w2.rows(), p.w2.cols()),
      Eigen::MatrixXd::Zero(p.w3.rows(), p.w3.cols()),
      Eigen::MatrixXd::Zero(d, d),
      Eigen::VectorXd::Zero(p.b1.size()),
      Eigen::VectorXd::Zero(p.b2.size()),
      Eigen::VectorXd::Zero(d)};
  ToyDenoiser::Parameters v = m;

  Rng rng(derive_seed(config.seed, 1));
  const int bs = config.batch_size;
  Adam adam{config.learning_rate};
  Eigen::MatrixXd x0(d, bs), noise(d, bs);
  std::vector<int> steps(bs);
  for (int it = 0; it < config.steps; ++it) {
    for (int j = 0; j < bs; ++j) {
      const auto& img = data[rng.below(data.size())];
      require_same_shape(img, data.front(), "train_toy_denoiser");
      x0.col(j) = img.data();
      steps[j] = 1 + static_cast<int>(rng.below(sched.steps()));
      noise.col(j) = rng.normal_vector(d);
    }
    Eigen::MatrixXd xt(d, bs);
    for (int j = 0; j < bs; ++j) {
      const double ab = sched.alpha_bar(steps[j]);
      xt.col(j) = std::sqrt(ab) * x0.col(j) + std::sqrt(1 - ab) * noise.col(j);
    }

    // Forward.
    const Eigen::MatrixXd in = embed_inputs(xt, steps);
    const Eigen::MatrixXd h1 = ((p.w1 * in).colwise() + p.b1).array().tanh();
    const Eigen::MatrixXd h2 = ((p.w2 * h1).colwise() + p.b2).array().tanh();
    const Eigen::MatrixXd out = ((p.w3 * h2).colwise() + p.b3) + p.skip * xt;
    const Eigen::MatrixXd err = out - noise;
    const double loss = err.squaredNorm() / static_cast<double>(d * bs);
    if (!std::isfinite(loss)) {
      throw TrainingDivergenceError("toy denoiser loss became non-finite at "
                                    "step " + std::to_string(it));
    }
    model.loss_history.push_back(loss);

    // Backward.
    const Eigen::MatrixXd g_out = 2.0 * err / static_cast<double>(d * bs);
    const Eigen::MatrixXd g_w3 = g_out * h2.transpose();
    const Eigen::VectorXd g_b3 = g_out.rowwise().sum();
    const Eigen::MatrixXd g_skip = g_out * xt.transpose();
    const Eigen::MatrixXd g_h2 =
        (p.w3.transpose() * g_out).array() * (1 - h2.array().square());
    const Eigen::MatrixXd g_w2 = g_h2 * h1.transpose();
    const Eigen::VectorXd g_b2 = g_h2.rowwise().sum();
    const Eigen::MatrixXd g_h1 =
        (p.w2.transpose() * g_h2).array() * (1 - h1.array().square());
    const Eigen::MatrixXd g_w1 = g_h1 * in.transpose();
    const Eigen::VectorXd g_b1 = g_h1.rowwise().sum();

    ++adam.step;
    adam.update(p.w1, g_w1, m.w1, v.w1);
    adam.update(p.b1, g_b1, m.b1, v.b1);
    adam.update(p.w2, g_w2, m.w2, v.w2);
    adam.update(p.b2, g_b2, m.b2, v.b2);
    adam.update(p.w3, g_w3, m.w3, v.w3);
    adam.update(p.b3, g_b3, m.b3, v.b3);
    adam.update(p.skip, g_skip, m.skip, v.skip);
  }
  return model;
}

ToyDenoiser train_toy_denoiser(const DatasetSpec& spec,
                               const NoiseSchedule& sched,
                               const ToyTrainConfig& config) {
  return train_toy_denoiser(generate_dataset(spec, config.dataset_size), sched,
                            config);
}

}  // namespace privrecon
