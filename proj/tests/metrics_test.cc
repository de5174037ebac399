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

#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "privrecon/errors.hpp"
#include "privrecon/metrics.hpp"
#include "privrecon/priors.hpp"
#include "privrecon/random.hpp"

namespace privrecon {
namespace {

ImageTensor random_image(const ImageShape& s, std::uint64_t seed) {
  Rng rng(RngSeed{seed});
  ImageTensor img(s);
  for (Index i = 0; i < img.size(); ++i) img.data()[i] = rng.uniform();
  return img;
}

// Direct windowed SSIM: every valid 11x11 window, 2-D Gaussian weights.
double ssim_oracle(const ImageTensor& a, const ImageTensor& b) {
  const int n = 11;
  const double sigma = 1.5;
  std::vector<double> w1(n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    w1[i] = std::exp(-(i - 5.0) * (i - 5.0) / (2 * sigma * sigma));
    sum += w1[i];
  }
  for (double& v : w1) v /= sum;
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0.0;
  for (int ch = 0; ch < a.channels(); ++ch) {
    double acc = 0.0;
    int count = 0;
    for (int r0 = 0; r0 + n <= a.height(); ++r0) {
      for (int q0 = 0; q0 + n <= a.width(); ++q0) {
        double mx = 0, my = 0;
        for (int u = 0; u < n; ++u)
          for (int v = 0; v < n; ++v) {
            const double w = w1[u] * w1[v];
            mx += w * std::clamp(a(r0 + u, q0 + v, ch), 0.0, 1.0);
            my += w * std::clamp(b(r0 + u, q0 + v, ch), 0.0, 1.0);
          }
        double sxx = 0, syy = 0, sxy = 0;
        for (int u = 0; u < n; ++u)
          for (int v = 0; v < n; ++v) {
            const double w = w1[u] * w1[v];
            const double x = std::clamp(a(r0 + u, q0 + v, ch), 0.0, 1.0) - mx;
            const double y = std::clamp(b(r0 + u, q0 + v, ch), 0.0, 1.0) - my;
            sxx += w * x * x;
            syy += w * y * y;
            sxy += w * x * y;
          }
        acc += ((2 * mx * my + c1) * (2 * sxy + c2)) /
               ((mx * mx + my * my + c1) * (sxx + syy + c2));
        ++count;
      }
    }
    total += acc / count;
  }
  return total / a.channels();
}

TEST(Mse, IdentityIsZero) {
  const auto a = random_image({5, 6, 3}, 1);
  EXPECT_EQ(mse(a, a), 0.0);
}

TEST(Mse, ConstantOffset) {
  for (const ImageShape s : {ImageShape{1, 1, 1}, ImageShape{7, 3, 3}}) {
    EXPECT_DOUBLE_EQ(mse(ImageTensor::constant(s, 0.0), ImageTensor::constant(s, 1.0)),
                     1.0);
  }
}

TEST(Mse, MatchesScalarLoop) {
  const auto a = random_image({4, 4, 1}, 2);
  const auto b = random_image({4, 4, 1}, 3);
  double acc = 0.0;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      const double d = a(r, c, 0) - b(r, c, 0);
      acc += d * d;
    }
  EXPECT_NEAR(mse(a, b), acc / 16.0, 1e-15);
}

TEST(Mse, ShapeMismatchThrows) {
  EXPECT_THROW(mse(ImageTensor(2, 2, 1), ImageTensor(2, 3, 1)), DimensionError);
}

TEST(Ssim, IdentityIsOne) {
  const auto a = random_image({16, 16, 3}, 4);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
}

TEST(Ssim, HalfBlackHalfWhiteInverseMatchesOracle) {
  ImageTensor x(16, 16, 1);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) x(r, c, 0) = c < 8 ? 0.0 : 1.0;
  ImageTensor y = x;
  y.data() = (1.0 - x.data().array()).matrix();
  EXPECT_NEAR(ssim(x, y), ssim_oracle(x, y), 1e-12);
  EXPECT_LT(ssim(x, y), 0.0);
}

TEST(Ssim, RandomImagesMatchOracle) {
  const auto a = random_image({13, 17, 3}, 5);
  auto b = random_image({13, 17, 3}, 6);
  b.data() = (0.5 * a.data() + 0.5 * b.data()).eval();
  EXPECT_NEAR(ssim(a, b), ssim_oracle(a, b), 1e-12);
}

TEST(Ssim, Symmetric) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto a = random_image({12, 12, 1}, 10 + s);
    const auto b = random_image({12, 12, 1}, 20 + s);
    EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-14);
  }
}

TEST(Ssim, ClipsOutOfRangeValues) {
  auto a = random_image({11, 11, 1}, 7);
  auto b = a;
  b.data()[0] = 5.0;
  a.data()[0] = 1.0;
  EXPECT_NEAR(ssim(a, b), 1.0, 1e-12);
}

TEST(Ssim, TooSmallThrows) {
  EXPECT_THROW(ssim(ImageTensor(8, 8, 1), ImageTensor(8, 8, 1)), DimensionError);
}

TEST(PairwiseBaseline, IdenticalImagesSsimOne) {
  const auto a = random_image({12, 12, 1}, 8);
  std::vector<ImageTensor> v{a, a, a};
  EXPECT_NEAR(pairwise_baseline(v, Metric::kSsim), 1.0, 1e-12);
}

TEST(PairwiseBaseline, ZeroAndOneMse) {
  std::vector<ImageTensor> v{ImageTensor::constant({3, 3, 1}, 0.0),
                             ImageTensor::constant({3, 3, 1}, 1.0)};
  EXPECT_DOUBLE_EQ(pairwise_baseline(v, Metric::kMse), 1.0);
}

TEST(PairwiseBaseline, MatchesPairLoopOnGmmSamples) {
  GmmPrior prior;
  prior.shape = {4, 4, 1};
  for (int k = 0; k < 3; ++k) {
    prior.components.push_back(
        {1.0 / 3.0, Eigen::VectorXd::Constant(16, 0.2 + 0.3 * k), 0.01});
  }
  const auto samples = gmm_sample(prior, 10, RngSeed{9});
  double total = 0.0;
  int pairs = 0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      if (i < j) {
        double d = 0.0;
        for (Index p = 0; p < 16; ++p)
          d += std::pow(samples[i].data()[p] - samples[j].data()[p], 2);
        total += d / 16.0;
        ++pairs;
      }
  EXPECT_NEAR(pairwise_baseline(samples, Metric::kMse), total / pairs, 1e-14);
}

TEST(PairwiseBaseline, NeedsTwoImages) {
  std::vector<ImageTensor> v{ImageTensor(2, 2, 1)};
  EXPECT_THROW(pairwise_baseline(v, Metric::kMse), ArgumentError);
}

TEST(Metric, ParseRoundTrip) {
  EXPECT_EQ(parse_metric("mse"), Metric::kMse);
  EXPECT_EQ(parse_metric(metric_name(Metric::kSsim)), Metric::kSsim);
  EXPECT_THROW(parse_metric("lpips"), ArgumentError);
}

TEST(Rng, DerivedSeedsAreDeterministicAndDistinct) {
  EXPECT_EQ(derive_seed(RngSeed{1}, 2).value, derive_seed(RngSeed{1}, 2).value);
  EXPECT_NE(derive_seed(RngSeed{1}, 2).value, derive_seed(RngSeed{1}, 3).value);
  Rng a(RngSeed{5}), b(RngSeed{5});
  EXPECT_EQ(a.normal_vector(8), b.normal_vector(8));
}

}  // namespace
}  // namespace privrecon
