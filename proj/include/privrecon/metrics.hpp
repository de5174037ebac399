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

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "privrecon/image.hpp"

namespace privrecon {

enum class Metric { kMse, kSsim };

inline const char* metric_name(Metric m) {
  return m == Metric::kMse ? "mse" : "ssim";
}
Metric parse_metric(const std::string& name);

struct SimilarityScore {
  Metric metric = Metric::kMse;
  double value = 0.0;
};

// Lower is better for MSE, higher for SSIM.
inline bool better(Metric m, double a, double b) {
  return m == Metric::kMse ? a < b : a > b;
}

// Mean squared difference over all elements. Computed on raw (unclipped)
// values.
template <typename Scalar>
Scalar mse(const Image<Scalar>& a, const Image<Scalar>& b) {
  require_same_shape(a, b, "mse");
  if (a.empty()) return Scalar(0);
  return (a.data() - b.data()).squaredNorm() / static_cast<Scalar>(a.size());
}

struct SsimOptions {
  int window = 11;
  double window_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

namespace detail {

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gaussian_window(int size,
                                                         double sigma) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w(size);
  const double centre = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - centre;
    w[i] = static_cast<Scalar>(std::exp(-d * d / (2.0 * sigma * sigma)));
  }
  return w / w.sum();
}

// 'valid' separable correlation with a symmetric 1-D kernel.
template <typename Plane, typename Kernel>
Plane filter_valid(const Plane& in, const Kernel& k) {
  const Eigen::Index n = k.size();
  const Eigen::Index rows = in.rows() - n + 1;
  const Eigen::Index cols = in.cols() - n + 1;
  Plane tmp = Plane::Zero(rows, in.cols());
  for (Eigen::Index i = 0; i < n; ++i) tmp += k[i] * in.middleRows(i, rows);
  Plane out = Plane::Zero(rows, cols);
  for (Eigen::Index j = 0; j < n; ++j) out += k[j] * tmp.middleCols(j, cols);
  return out;
}

}  // namespace detail

// Mean SSIM over all full Gaussian windows, averaged over channels. Inputs
// are clipped to [0, 1] first.
template <typename Scalar>
Scalar ssim(const Image<Scalar>& a, const Image<Scalar>& b,
            const SsimOptions& opt = {}) {
  require_same_shape(a, b, "ssim");
  if (a.height() < opt.window || a.width() < opt.window) {
    throw DimensionError("ssim: image " + a.shape().to_string() +
                         " is smaller than the " + std::to_string(opt.window) +
                         "x" + std::to_string(opt.window) + " window");
  }
  using Plane = typename Image<Scalar>::Plane;
  const auto kernel = detail::gaussian_window<Scalar>(opt.window,
                                                      opt.window_sigma);
  const Scalar c1 = static_cast<Scalar>(std::pow(opt.k1 * opt.data_range, 2));
  const Scalar c2 = static_cast<Scalar>(std::pow(opt.k2 * opt.data_range, 2));
  const Image<Scalar> ca = a.clipped();
  const Image<Scalar> cb = b.clipped();

  Scalar total = 0;
  for (int ch = 0; ch < a.channels(); ++ch) {
    const Plane x = ca.plane(ch);
    const Plane y = cb.plane(ch);
    const Plane mx = detail::filter_valid(x, kernel);
    const Plane my = detail::filter_valid(y, kernel);
    const Plane sxx =
        detail::filter_valid(Plane(x.cwiseProduct(x)), kernel) -
        Plane(mx.cwiseProduct(mx));
    const Plane syy =
        detail::filter_valid(Plane(y.cwiseProduct(y)), kernel) -
        Plane(my.cwiseProduct(my));
    const Plane sxy =
        detail::filter_valid(Plane(x.cwiseProduct(y)), kernel) -
        Plane(mx.cwiseProduct(my));
    const auto num = (2 * mx.cwiseProduct(my).array() + c1) *
                     (2 * sxy.array() + c2);
    const auto den = (mx.cwiseProduct(mx).array() +
                      my.cwiseProduct(my).array() + c1) *
                     (sxx.array() + syy.array() + c2);
    total += (num / den).mean();
  }
  return total / static_cast<Scalar>(a.channels());
}

template <typename Scalar>
Scalar similarity(const Image<Scalar>& a, const Image<Scalar>& b, Metric m) {
  return m == Metric::kMse ? mse(a, b) : ssim(a, b);
}

// Mean metric over all unordered pairs: the "unrelated image" reference.
template <typename Scalar>
Scalar pairwise_baseline(std::span<const Image<Scalar>> images, Metric m) {
  if (images.size() < 2) {
    throw ArgumentError("pairwise_baseline needs at least two images");
  }
  Scalar total = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (std::size_t j = i + 1; j < images.size(); ++j) {
      total += similarity(images[i], images[j], m);
      ++pairs;
    }
  }
  return total / static_cast<Scalar>(pairs);
}

template <typename Scalar>
Scalar pairwise_baseline(const std::vector<Image<Scalar>>& images, Metric m) {
  return pairwise_baseline(std::span<const Image<Scalar>>(images), m);
}

}  // namespace privrecon
