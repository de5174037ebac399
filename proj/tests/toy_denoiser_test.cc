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

#include <cmath>

#include <gtest/gtest.h>

#include "privrecon/errors.hpp"
#include "privrecon/priors.hpp"
#include "privrecon/toy_denoiser.hpp"

namespace privrecon {
namespace {

GmmPrior known_prior() {
  GmmPrior p;
  p.shape = {2, 2, 1};
  Eigen::VectorXd m1(4), m2(4), m3(4);
  m1 << 0.2, 0.3, 0.2, 0.3;
  m2 << 0.8, 0.7, 0.8, 0.6;
  m3 << 0.2, 0.8, 0.8, 0.2;
  p.components = {{0.4, m1, 0.005}, {0.35, m2, 0.005}, {0.25, m3, 0.005}};
  return p;
}

ToyTrainConfig small_config() {
  ToyTrainConfig cfg;
  cfg.hidden = 48;
  cfg.steps = 3000;
  cfg.seed = RngSeed{1};
  return cfg;
}

class ToyDenoiserTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    sched_ = new NoiseSchedule(default_schedule());
    const auto data = gmm_sample(known_prior(), 2000, RngSeed{2});
    model_ = new ToyDenoiser(train_toy_denoiser(data, *sched_, small_config()));
  }
  static void TearDownTestSuite() {
    delete model_;
    delete sched_;
  }
  static NoiseSchedule* sched_;
  static ToyDenoiser* model_;
};

NoiseSchedule* ToyDenoiserTest::sched_ = nullptr;
ToyDenoiser* ToyDenoiserTest::model_ = nullptr;

TEST_F(ToyDenoiserTest, LossDecreases) {
  const auto& h = model_->loss_history;
  ASSERT_EQ(h.size(), 3000u);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 100; ++i) {
    head += h[i];
    tail += h[h.size() - 1 - i];
  }
  EXPECT_LT(tail, head);
}

TEST_F(ToyDenoiserTest, AgreesWithExactPredictorAtMidSchedule) {
  GmmPredictor exact(known_prior(), *sched_);
  const auto held_out = gmm_sample(known_prior(), 500, RngSeed{3});
  double sq = 0.0;
  Index count = 0;
  for (std::size_t i = 0; i < held_out.size(); ++i) {
    const int t = 400 + static_cast<int>(i % 200);
    const auto xt = forward_diffuse(held_out[i], t, *sched_, RngSeed{1000 + i});
    const auto diff = model_->predict(xt, t).data() - exact.predict(xt, t).data();
    sq += diff.squaredNorm();
    count += diff.size();
  }
  EXPECT_LT(std::sqrt(sq / count), 0.15);
}

TEST_F(ToyDenoiserTest, PredictionDeterministic) {
  ImageTensor x(2, 2, 1);
  x.data() << 0.1, -0.4, 0.9, 0.3;
  EXPECT_EQ(model_->predict(x, 250).data(), model_->predict(x, 250).data());
  EXPECT_THROW(model_->predict(ImageTensor(3, 3, 1), 250), DimensionError);
}

TEST(ToyDenoiserTraining, SeededRunsIdentical) {
  const auto sched = default_schedule();
  const auto data = gmm_sample(known_prior(), 200, RngSeed{4});
  ToyTrainConfig cfg;
  cfg.hidden = 8;
  cfg.steps = 50;
  cfg.seed = RngSeed{5};
  const auto a = train_toy_denoiser(data, sched, cfg);
  const auto b = train_toy_denoiser(data, sched, cfg);
  EXPECT_EQ(a.loss_history, b.loss_history);
  EXPECT_EQ(a.parameters().w1, b.parameters().w1);
}

TEST(TimeEmbedding, BoundedAndDistinct) {
  const auto e1 = time_embedding(1);
  const auto e2 = time_embedding(500);
  EXPECT_EQ(e1.size(), ToyDenoiser::kTimeEmbedding);
  EXPECT_LE(e1.cwiseAbs().maxCoeff(), 1.0);
  EXPECT_GT((e1 - e2).norm(), 0.1);
}

}  // namespace
}  // namespace privrecon
