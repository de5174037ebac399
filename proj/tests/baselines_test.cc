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
#include <numbers>

#include <gtest/gtest.h>

#include "privrecon/baselines.hpp"
#include "privrecon/errors.hpp"
#include "privrecon/priors.hpp"

namespace privrecon {
namespace {

std::vector<ImageTensor> basis_candidates(int n, int dim) {
  std::vector<ImageTensor> out;
  for (int i = 0; i < n; ++i) {
    ImageTensor x(1, dim, 1);
    x.data()[i % dim] = 1.0;
    if (i >= dim) x.data()[(i + 1) % dim] = 0.5;
    out.push_back(x);
  }
  return out;
}

ImageTensor smooth_image(int h, int w, std::uint64_t seed) {
  Rng rng(RngSeed{seed});
  const double fx = 1 + rng.uniform(), fy = 1 + rng.uniform();
  ImageTensor x(h, w, 1);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      x(r, c, 0) = 0.5 + 0.3 * std::sin(2 * std::numbers::pi * fx * r / h) *
                             std::cos(2 * std::numbers::pi * fy * c / w);
  return x;
}

ImageTensor add_noise(const ImageTensor& x, double sigma, std::uint64_t seed) {
  Rng rng(RngSeed{seed});
  return ImageTensor(x.shape(), x.data() + sigma * rng.normal_vector(x.size()));
}

// Oracle: explicit argmax over all candidates, first index on ties.
int scan_match(const PrivatizedObservation& obs, const std::vector<ImageTensor>& cands) {
  int best = -1;
  double best_score = -INFINITY;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const double lam = std::max(cands[i].norm() / obs.params.clip_norm, 1.0);
    double s = 0.0;
    for (Index p = 0; p < cands[i].size(); ++p) s += obs.x_priv.data()[p] * cands[i].data()[p] / lam;
    if (s > best_score) {
      best_score = s;
      best = static_cast<int>(i);
    }
  }
  return best;
}

TEST(ReroMatch, NoiselessOrthogonalCandidates) {
  const auto cands = basis_candidates(8, 8);
  for (int target = 0; target < 8; ++target) {
    ReRoConfig cfg{cands, target, {1.0, 0.0}};
    const auto obs = privatize(cands[target], cfg.params, RngSeed{1});
    const auto m = rero_match(obs, cfg);
    EXPECT_TRUE(m.correct);
    EXPECT_EQ(m.chosen_index, target);
  }
}

TEST(ReroMatch, AgreesWithLinearScan) {
  DatasetSpec spec;
  spec.seed = 2;
  const auto cands = generate_dataset(spec, 64);
  for (int trial = 0; trial < 300; ++trial) {
    const int target = trial % 64;
    ReRoConfig cfg{cands, target, PrivacyParams::from_mu(5.0)};
    const auto obs = privatize(cands[target], cfg.params, RngSeed{static_cast<std::uint64_t>(trial)});
    EXPECT_EQ(rero_match(obs, cfg).chosen_index, scan_match(obs, cands));
  }
}

TEST(ReroGamma, NoiselessIsOne) {
  DatasetSpec spec;
  spec.seed = 3;
  const auto g = estimate_rero_gamma(generate_dataset(spec, 32), {1.0, 0.0}, 200, RngSeed{4});
  EXPECT_DOUBLE_EQ(g.gamma, 1.0);
}

TEST(ReroGamma, HugeNoiseIsUniformGuess) {
  DatasetSpec spec;
  spec.seed = 5;
  const auto cands = generate_dataset(spec, 256);
  const auto g = estimate_rero_gamma(cands, {1.0, 1e3}, 10000, RngSeed{6});
  const double se = std::sqrt((1.0 / 256) * (255.0 / 256) / 10000);
  EXPECT_NEAR(g.gamma, 1.0 / 256, 3 * se);
  EXPECT_EQ(g.trials, 10000);
}

TEST(ReroGamma, NonIncreasingInSigma) {
  DatasetSpec spec;
  spec.seed = 7;
  const auto cands = generate_dataset(spec, 64);
  double prev = 1.0;
  for (double sigma : {0.0, 0.02, 0.05, 0.1, 0.3, 1.0}) {
    const auto g = estimate_rero_gamma(cands, {1.0, sigma}, 2000, RngSeed{8});
    EXPECT_LE(g.gamma, prev + 3 * g.standard_error) << sigma;
    prev = g.gamma;
  }
}

TEST(MatchReconstruction, ExactCandidateChosen) {
  DatasetSpec spec{DatasetFamily::kBars, {12, 12, 1}, 9, 0.01};
  const auto cands = generate_dataset(spec, 20);
  for (Metric m : {Metric::kMse, Metric::kSsim}) {
    ReRoConfig cfg{cands, 13, {1.0, 0.5}};
    const auto out = match_reconstruction(cands[13], cfg, m);
    EXPECT_EQ(out.chosen_index, 13);
    EXPECT_TRUE(out.correct);
  }
}

TEST(AggregateGamma, StandardError) {
  std::vector<MatchOutcome> v(100);
  for (int i = 0; i < 25; ++i) v[i].correct = true;
  const auto g = aggregate_gamma(v);
  EXPECT_DOUBLE_EQ(g.gamma, 0.25);
  EXPECT_NEAR(g.standard_error, std::sqrt(0.25 * 0.75 / 100), 1e-12);
}

TEST(NoiseEstimate, ConstantImage) {
  const auto flat = ImageTensor::constant({64, 64, 1}, 0.4);
  EXPECT_EQ(estimate_noise_sigma(flat).sigma_hat, 0.0);
  const double est = estimate_noise_sigma(add_noise(flat, 0.2, 1)).sigma_hat;
  EXPECT_NEAR(est, 0.2, 0.02);
}

TEST(NoiseEstimate, ScalesLinearly) {
  const auto x = smooth_image(64, 64, 2);
  const double a = estimate_noise_sigma(add_noise(x, 0.1, 3)).sigma_hat;
  const double b = estimate_noise_sigma(add_noise(x, 0.2, 3)).sigma_hat;
  EXPECT_NEAR(b / a, 2.0, 0.2);
}

TEST(NoiseEstimate, RejectsOddShape) {
  EXPECT_THROW(estimate_noise_sigma(ImageTensor(5, 4, 1)), DimensionError);
}

TEST(WaveletDenoise, ZeroThresholdIsIdentity) {
  const auto x = add_noise(smooth_image(16, 16, 4), 0.1, 5);
  EXPECT_EQ(wavelet_denoise(x, 0.0).data(), x.data());
}

TEST(WaveletDenoise, ReducesErrorOnSmoothImages) {
  const auto x = smooth_image(64, 64, 6);
  const auto noisy = add_noise(x, 0.2, 7);
  const auto den = wavelet_denoise(noisy, estimate_noise_sigma(noisy).sigma_hat);
  EXPECT_LT(mse(den, x), 0.5 * mse(noisy, x));
}

TEST(WaveletDenoise, ReapplicationIsNearlyStable) {
  const auto x = smooth_image(32, 32, 8);
  const auto noisy = add_noise(x, 0.1, 9);
  const auto once = wavelet_denoise(noisy, estimate_noise_sigma(noisy).sigma_hat);
  const auto twice = wavelet_denoise(once, estimate_noise_sigma(once).sigma_hat);
  EXPECT_LT(mse(twice, once), 0.05 * mse(noisy, once));
}

TEST(LambdaGrid, Endpoints) {
  const auto g = lambda_grid({32, 32, 3}, 1.0, 200);
  ASSERT_EQ(g.size(), 200u);
  EXPECT_EQ(g.front(), 1.0);
  EXPECT_NEAR(g.back(), 55.43, 5e-3);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(g[i], g[i - 1]);
  EXPECT_EQ(lambda_grid({2, 2, 1}, 5.0, 10), std::vector<double>{1.0});
}

TEST(ApproximateLambda, UnclippedNoiselessPicksOne) {
  const auto sched = default_schedule();
  DatasetSpec spec;
  spec.seed = 10;
  const auto fit = fit_gmm_from_dataset(spec, 8, RngSeed{11});
  GmmPredictor pred(fit.prior, sched);
  const auto x = generate_dataset({DatasetFamily::kBlobsA, {8, 8, 1}, 12, 0.01}, 1)[0];
  auto obs = privatize(x, {5.0, 0.0}, RngSeed{13});
  ASSERT_EQ(*obs.lambda, 1.0);
  obs.lambda.reset();
  LambdaSearchOptions opts;
  opts.grid_size = 40;
  const auto search = approximate_lambda(obs, sched, pred, opts);
  ASSERT_TRUE(search.lambda_hat.has_value());
  EXPECT_EQ(*search.lambda_hat, 1.0);
  EXPECT_EQ(search.candidates.size(), 40u);
  EXPECT_TRUE(search.candidates.front().reconstruction.has_value());
}

// 32x32x3 GMM prior rescaled so its draws have mean norm 27.24, plus a
// held-out draw of exactly that norm. The search infers scale from the
// prior, so the target must be typical of it.
struct LambdaFixture {
  NoiseSchedule sched = default_schedule();
  GmmPrior prior;
  ImageTensor x;

  LambdaFixture() {
    DatasetSpec spec{DatasetFamily::kBlobsA, {32, 32, 3}, 14, 0.01};
    EmOptions em;
    em.train_size = 600;
    prior = fit_gmm_from_dataset(spec, 8, RngSeed{15}, em).prior;
    double mean_norm = 0.0;
    const auto probe = gmm_sample(prior, 500, RngSeed{18});
    for (const auto& s : probe) mean_norm += s.norm();
    const double f = 27.24 * probe.size() / mean_norm;
    for (auto& c : prior.components) {
      c.mean *= f;
      c.variance *= f * f;
    }
    double gap = INFINITY;
    for (const auto& s : gmm_sample(prior, 2000, RngSeed{16})) {
      if (std::abs(s.norm() - 27.24) < gap) {
        gap = std::abs(s.norm() - 27.24);
        x = s;
      }
    }
    x.data() *= 27.24 / x.norm();
  }

  double log_error(std::uint64_t seed) const {
    GmmPredictor pred(prior, sched);
    auto obs = privatize(x, PrivacyParams::from_mu(30.0), RngSeed{seed});
    EXPECT_NEAR(*obs.lambda, 27.24, 1e-9);
    obs.lambda.reset();
    LambdaSearchOptions opts;
    opts.reconstruct = false;
    const auto search = approximate_lambda(obs, sched, pred, opts);
    EXPECT_TRUE(search.lambda_hat.has_value());
    return std::log(search.lambda_hat.value_or(1.0) / 27.24);
  }
};

TEST(ApproximateLambda, RecoversClippingFactorAtMuThirty) {
  const LambdaFixture f;
  ASSERT_TRUE(f.x.is_clean());
  const double cell = std::log(55.43) / 199;
  const double err = f.log_error(17);
  EXPECT_LE(std::abs(err), cell * (1 + 1e-9)) << err / cell << " cells";
}

TEST(ApproximateLambda, UnbiasedAcrossNoiseDraws) {
  const LambdaFixture f;
  std::vector<double> errs;
  for (std::uint64_t seed = 100; seed < 130; ++seed) errs.push_back(f.log_error(seed));
  double mean = 0.0, sq = 0.0;
  for (double e : errs) mean += e / errs.size();
  for (double e : errs) sq += (e - mean) * (e - mean) / (errs.size() - 1);
  EXPECT_LE(std::abs(mean), 3.0 * std::sqrt(sq / errs.size())) << mean;
  EXPECT_LT(std::sqrt(sq), 0.08);
}

}  // namespace
}  // namespace privrecon
