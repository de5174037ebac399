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

#include "privrecon/priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace privrecon {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

void GmmPrior::validate() const {
  validate_shape(shape);
  if (components.empty()) throw ArgumentError("GMM prior has no components");
  double total = 0.0;
  for (const auto& c : components) {
    if (c.mean.size() != dimension()) {
      throw DimensionError("GMM component mean has length " +
                           std::to_string(c.mean.size()) + ", expected " +
                           std::to_string(dimension()));
    }
    if (!(c.weight > 0.0)) throw ArgumentError("GMM weights must be positive");
    if (!(c.variance >= 0.0)) {
      throw ArgumentError("GMM variances must be nonnegative");
    }
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ArgumentError("GMM weights must sum to 1");
  }
}

double GmmPrior::log_density(const Eigen::VectorXd& x) const {
  if (x.size() != dimension()) throw DimensionError("GMM log_density");
  Eigen::VectorXd terms(components.size());
  const double d = static_cast<double>(dimension());
  for (std::size_t i = 0; i < components.size(); ++i) {
    const auto& c = components[i];
    terms[i] = std::log(c.weight) - 0.5 * d * (kLog2Pi + std::log(c.variance)) -
               0.5 * (x - c.mean).squaredNorm() / c.variance;
  }
  return log_sum_exp(terms);
}

GmmPredictor::GmmPredictor(GmmPrior prior, NoiseSchedule schedule)
    : prior_(std::move(prior)), schedule_(std::move(schedule)) {
  prior_.validate();
  const Index k = static_cast<Index>(prior_.components.size());
  means_.resize(prior_.dimension(), k);
  log_weights_.resize(k);
  variances_.resize(k);
  for (Index i = 0; i < k; ++i) {
    const auto& c = prior_.components[i];
    means_.col(i) = c.mean;
    log_weights_[i] = std::log(c.weight);
    variances_[i] = c.variance;
  }
}

void GmmPredictor::check_dim(Index n) const {
  if (n != prior_.dimension()) {
    throw DimensionError("GMM predictor expects dimension " +
                         std::to_string(prior_.dimension()) + ", got " +
                         std::to_string(n));
  }
}

Eigen::VectorXd GmmPredictor::component_log_terms(
    const Eigen::VectorXd& x, int t, Eigen::VectorXd* variances) const {
  check_dim(x.size());
  const double ab = schedule_.alpha_bar(t);
  const double a = std::sqrt(ab);
  const double d = static_cast<double>(x.size());
  const Eigen::VectorXd v = (ab * variances_.array() + (1.0 - ab)).matrix();
  const Eigen::VectorXd dist2 =
      ((a * means_).colwise() - x).colwise().squaredNorm().transpose();
  Eigen::VectorXd terms = log_weights_.array() -
                          0.5 * d * (kLog2Pi + v.array().log()) -
                          0.5 * dist2.array() / v.array();
  if (variances) *variances = v;
  return terms;
}

Eigen::VectorXd GmmPredictor::responsibilities(const Eigen::VectorXd& x,
                                               int t) const {
  const Eigen::VectorXd terms = component_log_terms(x, t, nullptr);
  return (terms.array() - log_sum_exp(terms)).exp();
}

Eigen::VectorXd GmmPredictor::score(const Eigen::VectorXd& x, int t) const {
  Eigen::VectorXd v;
  const Eigen::VectorXd terms = component_log_terms(x, t, &v);
  const Eigen::VectorXd r = (terms.array() - log_sum_exp(terms)).exp();
  const double a = std::sqrt(schedule_.alpha_bar(t));
  // sum_i r_i (a m_i - x) / v_i
  const Eigen::VectorXd coef = (r.array() / v.array()).matrix();
  return a * (means_ * coef) - coef.sum() * x;
}

ImageTensor GmmPredictor::predict(const ImageTensor& x_t, int t) const {
  if (t < 1 || t > schedule_.steps()) {
    throw ArgumentError("GMM predictor step out of range");
  }
  const double s = std::sqrt(1.0 - schedule_.alpha_bar(t));
  return ImageTensor(x_t.shape(), -s * score(x_t.data(), t));
}

std::optional<double> GmmPredictor::log_density(const ImageTensor& x_t,
                                                int t) const {
  return log_sum_exp(component_log_terms(x_t.data(), t, nullptr));
}

GmmPredictor gmm_predictor(GmmPrior prior, NoiseSchedule schedule) {
  return GmmPredictor(std::move(prior), std::move(schedule));
}

std::vector<ImageTensor> gmm_sample(const GmmPrior& prior, int n,
                                    RngSeed seed) {
  prior.validate();
  if (n < 1) throw ArgumentError("gmm_sample needs n >= 1");
  Rng rng(seed);
  std::vector<double> weights;
  for (const auto& c : prior.components) weights.push_back(c.weight);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::vector<ImageTensor> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const auto& c = prior.components[pick(rng.engine())];
    out.emplace_back(prior.shape, c.mean + std::sqrt(c.variance) *
                                               rng.normal_vector(c.mean.size()));
  }
  return out;
}

// ---------------------------------------------------------------------------

const char* family_name(DatasetFamily f) {
  switch (f) {
    case DatasetFamily::kBlobsA:
      return "blobs-a";
    case DatasetFamily::kBlobsB:
      return "blobs-b";
    case DatasetFamily::kBars:
      return "bars";
  }
  return "unknown";
}

DatasetFamily parse_family(const std::string& name) {
  if (name == "blobs-a" || name == "BlobsA") return DatasetFamily::kBlobsA;
  if (name == "blobs-b" || name == "BlobsB") return DatasetFamily::kBlobsB;
  if (name == "bars" || name == "Bars") return DatasetFamily::kBars;
  throw ArgumentError("unknown dataset family '" + name + "'");
}

namespace {

struct BlobFamily {
  double background;
  double amp_lo, amp_hi;
  double anchor_lo, anchor_hi;  // in units of 8-pixel images
};

constexpr BlobFamily kFamilyA{0.50, 0.07, 0.11, 1.5, 5.5};
constexpr BlobFamily kFamilyB{0.45, 0.12, 0.17, 2.1667, 6.1667};
constexpr int kAnchorsPerAxis = 4;
constexpr double kBlobWidth = 1.5;
constexpr double kJitter = 0.2;

void draw_blob(ImageTensor& img, const BlobFamily& fam, double scale_r,
               double scale_c, Rng& rng) {
  const double step =
      (fam.anchor_hi - fam.anchor_lo) / (kAnchorsPerAxis - 1);
  const int ar = static_cast<int>(rng.below(kAnchorsPerAxis));
  const int ac = static_cast<int>(rng.below(kAnchorsPerAxis));
  const double cy = (fam.anchor_lo + ar * step + kJitter * rng.normal()) *
                    scale_r;
  const double cx = (fam.anchor_lo + ac * step + kJitter * rng.normal()) *
                    scale_c;
  const double amp = fam.amp_lo + (fam.amp_hi - fam.amp_lo) * rng.uniform();
  const double w = kBlobWidth * std::sqrt(scale_r * scale_c);
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      const double d2 = (r - cy) * (r - cy) + (c - cx) * (c - cx);
      const double v = fam.background + amp * std::exp(-d2 / (2 * w * w));
      for (int ch = 0; ch < img.channels(); ++ch) img(r, c, ch) = v;
    }
  }
}

void draw_bar(ImageTensor& img, double scale_r, double scale_c, Rng& rng) {
  const bool horizontal = rng.uniform() < 0.5;
  const int extent = horizontal ? img.height() : img.width();
  const double scale = horizontal ? scale_r : scale_c;
  const int thickness = std::max(1, static_cast<int>(std::lround(scale)));
  const int start = static_cast<int>(rng.below(extent - thickness + 1));
  const double amp = 0.15 + 0.10 * rng.uniform();
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      const int pos = horizontal ? r : c;
      const bool on = pos >= start && pos < start + thickness;
      for (int ch = 0; ch < img.channels(); ++ch) {
        img(r, c, ch) = 0.5 + (on ? amp : 0.0);
      }
    }
  }
}

}  // namespace

std::vector<ImageTensor> generate_dataset(const DatasetSpec& spec, int n) {
  validate_shape(spec.shape);
  if (n < 1) throw ArgumentError("generate_dataset needs n >= 1");
  Rng rng(RngSeed{spec.seed});
  const double scale_r = spec.shape.height / 8.0;
  const double scale_c = spec.shape.width / 8.0;
  std::vector<ImageTensor> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    ImageTensor img(spec.shape);
    switch (spec.family) {
      case DatasetFamily::kBlobsA:
        draw_blob(img, kFamilyA, scale_r, scale_c, rng);
        break;
      case DatasetFamily::kBlobsB:
        draw_blob(img, kFamilyB, scale_r, scale_c, rng);
        break;
      case DatasetFamily::kBars:
        draw_bar(img, scale_r, scale_c, rng);
        break;
    }
    if (spec.pixel_noise > 0.0) {
      img.data() += spec.pixel_noise * rng.normal_vector(img.size());
    }
    out.push_back(img.clipped());
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// k-means++ seeding over the rows of `x` (N x D).
Eigen::MatrixXd seed_means(const Eigen::MatrixXd& x, int k, Rng& rng) {
  const Index n = x.rows();
  Eigen::MatrixXd means(k, x.cols());
  means.row(0) = x.row(static_cast<Index>(rng.below(n)));
  Eigen::VectorXd d2 = (x.rowwise() - means.row(0)).rowwise().squaredNorm();
  for (int j = 1; j < k; ++j) {
    const double total = d2.sum();
    Index chosen = 0;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (chosen = 0; chosen < n - 1; ++chosen) {
        u -= d2[chosen];
        if (u <= 0.0) break;
      }
    } else {
      chosen = static_cast<Index>(rng.below(n));
    }
    means.row(j) = x.row(chosen);
    d2 = d2.cwiseMin(
        Eigen::VectorXd((x.rowwise() - means.row(j)).rowwise().squaredNorm()));
  }
  return means;
}

}  // namespace

GmmFit fit_gmm(const std::vector<ImageTensor>& data, int k, RngSeed seed,
               const EmOptions& options) {
  if (k < 1) throw ArgumentError("fit_gmm needs k >= 1");
  if (data.empty()) throw ArgumentError("fit_gmm needs data");
  const ImageShape shape = data.front().shape();
  const Index n = static_cast<Index>(data.size());
  const Index d = shape.size();
  Eigen::MatrixXd x(n, d);
  for (Index i = 0; i < n; ++i) {
    require_same_shape(data[i], data.front(), "fit_gmm");
    x.row(i) = data[i].data().transpose();
  }

  Rng rng(seed);
  Eigen::MatrixXd means = seed_means(x, k, rng);  // K x D
  Eigen::VectorXd weights = Eigen::VectorXd::Constant(k, 1.0 / k);
  const double global_var =
      (x.rowwise() - x.colwise().mean()).squaredNorm() / (n * d);
  Eigen::VectorXd vars =
      Eigen::VectorXd::Constant(k, std::max(global_var, options.variance_floor));

  GmmFit fit;
  Eigen::MatrixXd log_r(n, k);
  const Eigen::VectorXd x_sq = x.rowwise().squaredNorm();
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    // E-step.
    const Eigen::MatrixXd cross = x * means.transpose();  // N x K
    const Eigen::VectorXd m_sq = means.rowwise().squaredNorm();
    double ll = 0.0;
    for (Index i = 0; i < n; ++i) {
      for (int j = 0; j < k; ++j) {
        const double dist2 =
            std::max(x_sq[i] - 2.0 * cross(i, j) + m_sq[j], 0.0);
        log_r(i, j) = std::log(weights[j]) -
                      0.5 * d * (kLog2Pi + std::log(vars[j])) -
                      0.5 * dist2 / vars[j];
      }
      const double lse = log_sum_exp(log_r.row(i).transpose());
      log_r.row(i).array() -= lse;
      ll += lse;
    }
    ll /= static_cast<double>(n);
    const bool converged =
        !fit.log_likelihood.empty() &&
        std::abs(ll - fit.log_likelihood.back()) <=
            options.tolerance * std::max(1.0, std::abs(ll));
    fit.log_likelihood.push_back(ll);
    if (converged) break;

    // M-step.
    const Eigen::MatrixXd r = log_r.array().exp();
    const Eigen::VectorXd nk = r.colwise().sum().transpose();
    for (int j = 0; j < k; ++j) {
      if (nk[j] > 1e-12) {
        means.row(j) = (r.col(j).transpose() * x) / nk[j];
        const double ss =
            (r.col(j).array() *
             (x.rowwise() - means.row(j)).rowwise().squaredNorm().array())
                .sum();
        vars[j] = std::max(ss / (nk[j] * d), options.variance_floor);
      }
      weights[j] = std::max(nk[j] / n, 1e-12);
    }
    weights /= weights.sum();
  }

  fit.prior.shape = shape;
  for (int j = 0; j < k; ++j) {
    fit.prior.components.push_back(
        {weights[j], means.row(j).transpose(), vars[j]});
  }
  return fit;
}

GmmFit fit_gmm_from_dataset(const DatasetSpec& spec, int k, RngSeed seed,
                            const EmOptions& options) {
  return fit_gmm(generate_dataset(spec, options.train_size), k, seed, options);
}

}  // namespace privrecon
