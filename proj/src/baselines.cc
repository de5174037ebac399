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

#include "privrecon/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace privrecon {

void ReRoConfig::validate() const {
  if (candidates.empty()) throw ArgumentError("ReRo candidate set is empty");
  if (target_index < 0 ||
      target_index >= static_cast<int>(candidates.size())) {
    throw ArgumentError("ReRo target index outside the candidate set");
  }
  for (const auto& c : candidates) {
    require_same_shape(c, candidates.front(), "ReRo candidates");
  }
  params.validate();
}

GammaEstimate aggregate_gamma(const std::vector<MatchOutcome>& outcomes) {
  GammaEstimate g;
  g.trials = static_cast<int>(outcomes.size());
  if (g.trials == 0) return g;
  const auto hits = std::count_if(outcomes.begin(), outcomes.end(),
                                  [](const MatchOutcome& o) { return o.correct; });
  g.gamma = static_cast<double>(hits) / g.trials;
  g.standard_error = std::sqrt(g.gamma * (1.0 - g.gamma) / g.trials);
  return g;
}

namespace {

MatchOutcome argmax_dot(const Eigen::VectorXd& observed,
                        const Eigen::MatrixXd& clipped, int target) {
  const Eigen::VectorXd scores = clipped.transpose() * observed;
  Index best = 0;
  for (Index i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return {static_cast<int>(best), static_cast<int>(best) == target};
}

Eigen::MatrixXd clipped_candidates(const std::vector<ImageTensor>& candidates,
                                   double clip_norm) {
  Eigen::MatrixXd out(candidates.front().size(),
                      static_cast<Index>(candidates.size()));
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out.col(static_cast<Index>(i)) =
        candidates[i].data() / clip_factor(candidates[i], clip_norm);
  }
  return out;
}

}  // namespace

MatchOutcome rero_match(const PrivatizedObservation& obs,
                        const ReRoConfig& cfg) {
  cfg.validate();
  require_same_shape(obs.x_priv, cfg.candidates.front(), "rero_match");
  return argmax_dot(obs.x_priv.data(),
                    clipped_candidates(cfg.candidates, cfg.params.clip_norm),
                    cfg.target_index);
}

MatchOutcome match_reconstruction(const ImageTensor& rec, const ReRoConfig& cfg,
                                  Metric metric) {
  cfg.validate();
  int best = 0;
  double best_value = similarity(rec, cfg.candidates[0], metric);
  for (int i = 1; i < static_cast<int>(cfg.candidates.size()); ++i) {
    const double v = similarity(rec, cfg.candidates[i], metric);
    if (better(metric, v, best_value)) {
      best = i;
      best_value = v;
    }
  }
  return {best, best == cfg.target_index};
}

GammaEstimate estimate_rero_gamma(const std::vector<ImageTensor>& candidates,
                                  const PrivacyParams& params, int trials,
                                  RngSeed seed) {
  if (candidates.empty()) throw ArgumentError("ReRo candidate set is empty");
  if (trials < 1) throw ArgumentError("need at least one trial");
  const Eigen::MatrixXd clipped =
      clipped_candidates(candidates, params.clip_norm);
  Rng rng(seed);
  std::vector<MatchOutcome> outcomes;
  outcomes.reserve(trials);
  for (int i = 0; i < trials; ++i) {
    const int target = static_cast<int>(rng.below(candidates.size()));
    const auto obs = privatize(candidates[target], params,
                               RngSeed{rng.next_u64()});
    outcomes.push_back(argmax_dot(obs.x_priv.data(), clipped, target));
  }
  return aggregate_gamma(outcomes);
}

// ---------------------------------------------------------------------------

namespace {

using Plane = ImageTensor::Plane;

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  const double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + n / 2));
}

// One orthonormal 2-D Haar level on the top-left rows x cols block.
void haar_forward(Plane& p, Index rows, Index cols) {
  const Index hr = rows / 2, hc = cols / 2;
  Plane out(rows, cols);
  for (Index i = 0; i < hr; ++i) {
    for (Index j = 0; j < hc; ++j) {
      const double a = p(2 * i, 2 * j), b = p(2 * i, 2 * j + 1);
      const double c = p(2 * i + 1, 2 * j), d = p(2 * i + 1, 2 * j + 1);
      out(i, j) = (a + b + c + d) / 2;            // LL
      out(i, j + hc) = (a - b + c - d) / 2;       // detail across columns
      out(i + hr, j) = (a + b - c - d) / 2;       // detail across rows
      out(i + hr, j + hc) = (a - b - c + d) / 2;  // HH
    }
  }
  p.topLeftCorner(rows, cols) = out;
}

void haar_inverse(Plane& p, Index rows, Index cols) {
  const Index hr = rows / 2, hc = cols / 2;
  Plane out(rows, cols);
  for (Index i = 0; i < hr; ++i) {
    for (Index j = 0; j < hc; ++j) {
      const double ll = p(i, j), h = p(i, j + hc);
      const double v = p(i + hr, j), d = p(i + hr, j + hc);
      out(2 * i, 2 * j) = (ll + h + v + d) / 2;
      out(2 * i, 2 * j + 1) = (ll - h + v - d) / 2;
      out(2 * i + 1, 2 * j) = (ll + h - v - d) / 2;
      out(2 * i + 1, 2 * j + 1) = (ll - h - v + d) / 2;
    }
  }
  p.topLeftCorner(rows, cols) = out;
}

double soft(double x, double thr) {
  return x > thr ? x - thr : (x < -thr ? x + thr : 0.0);
}

}  // namespace

NoiseEstimate estimate_noise_sigma(const ImageTensor& img) {
  if (img.height() < 2 || img.width() < 2 || img.height() % 2 != 0 ||
      img.width() % 2 != 0) {
    throw DimensionError("noise estimation needs even height and width >= 2, "
                         "got " + img.shape().to_string());
  }
  double total = 0.0;
  for (int ch = 0; ch < img.channels(); ++ch) {
    std::vector<double> hh;
    hh.reserve(img.size() / 4);
    for (int i = 0; i + 1 < img.height(); i += 2) {
      for (int j = 0; j + 1 < img.width(); j += 2) {
        hh.push_back(std::abs(img(i, j, ch) - img(i, j + 1, ch) -
                              img(i + 1, j, ch) + img(i + 1, j + 1, ch)) /
                     2.0);
      }
    }
    total += median_of(std::move(hh)) / 0.6745;
  }
  return {total / img.channels()};
}

ImageTensor wavelet_denoise(const ImageTensor& img, double sigma_hat) {
  if (!(sigma_hat >= 0.0)) throw ArgumentError("sigma_hat must be >= 0");
  if (sigma_hat == 0.0) return img;
  const double n = static_cast<double>(img.height()) * img.width();
  const double thr = sigma_hat * std::sqrt(2.0 * std::log(n));
  ImageTensor out(img.shape());
  for (int ch = 0; ch < img.channels(); ++ch) {
    Plane p = img.plane(ch);
    std::vector<std::pair<Index, Index>> levels;
    Index rows = p.rows(), cols = p.cols();
    while (rows >= 2 && cols >= 2 && rows % 2 == 0 && cols % 2 == 0) {
      haar_forward(p, rows, cols);
      levels.emplace_back(rows, cols);
      // Threshold this level's three detail bands.
      for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
          if (i >= rows / 2 || j >= cols / 2) p(i, j) = soft(p(i, j), thr);
        }
      }
      rows /= 2;
      cols /= 2;
    }
    for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
      haar_inverse(p, it->first, it->second);
    }
    out.set_plane(ch, p);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> lambda_grid(const ImageShape& shape, double clip_norm,
                                int grid_size) {
  if (grid_size < 1) throw ArgumentError("lambda grid needs >= 1 point");
  if (!(clip_norm > 0.0)) throw ArgumentError("clip norm must be positive");
  const double hi =
      std::max(std::sqrt(static_cast<double>(shape.size())) / clip_norm, 1.0);
  std::vector<double> grid(grid_size);
  if (grid_size == 1 || hi == 1.0) {
    grid.assign(1, 1.0);
    return grid;
  }
  const double log_hi = std::log(hi);
  for (int i = 0; i < grid_size; ++i) {
    grid[i] = std::exp(log_hi * i / (grid_size - 1));
  }
  grid.back() = hi;
  return grid;
}

LambdaSearch approximate_lambda(const PrivatizedObservation& obs,
                                const NoiseSchedule& sched,
                                const NoisePredictor& predictor,
                                const LambdaSearchOptions& options) {
  obs.params.validate();
  const double d = static_cast<double>(obs.x_priv.size());
  LambdaSearch out;
  for (const double lambda :
       lambda_grid(obs.x_priv.shape(), obs.params.clip_norm,
                   options.grid_size)) {
    LambdaCandidate cand;
    cand.lambda = lambda;
    cand.sigma_hat = obs.noise_std() * lambda;
    if (cand.sigma_hat >= sched.max_sigma()) {
      out.candidates.push_back(std::move(cand));
      continue;
    }
    // Below sigma_1 nothing is denoised; the latent is still scored at t = 1.
    const bool denoise = cand.sigma_hat >= sched.sigma(1);
    cand.t_start = denoise ? match_markov_state(cand.sigma_hat, sched) : 0;
    const int t_score = std::max(cand.t_start, 1);
    const double s = sched.sigma(t_score);
    const double scale = lambda / std::sqrt(1.0 + s * s);
    const ImageTensor latent(obs.x_priv.shape(), scale * obs.x_priv.data());
    if (const auto logp = predictor.log_density(latent, t_score)) {
      // Change of variables back to x_priv so scores compare across lambda.
      cand.score = *logp + d * std::log(scale);
    }
    if (options.reconstruct) {
      ReconstructOptions ro;
      ro.lambda = lambda;
      cand.reconstruction =
          reconstruct(obs, sched, predictor, options.mode, options.seed, ro)
              .image;
    }
    out.candidates.push_back(std::move(cand));
  }
  const LambdaCandidate* best = nullptr;
  for (const auto& c : out.candidates) {
    if (c.score && (!best || *c.score > *best->score)) best = &c;
  }
  if (best) out.lambda_hat = best->lambda;
  return out;
}

}  // namespace privrecon
