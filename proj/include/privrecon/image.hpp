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

#include <algorithm>
#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "privrecon/errors.hpp"

namespace privrecon {

using Index = Eigen::Index;

struct ImageShape {
  int height = 0;
  int width = 0;
  int channels = 1;

  Index size() const {
    return static_cast<Index>(height) * width * channels;
  }
  bool operator==(const ImageShape&) const = default;
  std::string to_string() const {
    return std::to_string(height) + "x" + std::to_string(width) + "x" +
           std::to_string(channels);
  }
};

inline void validate_shape(const ImageShape& shape) {
  if (shape.height <= 0 || shape.width <= 0) {
    throw DimensionError("image height and width must be positive, got " +
                         shape.to_string());
  }
  if (shape.channels != 1 && shape.channels != 3) {
    throw DimensionError("image channels must be 1 or 3, got " +
                         shape.to_string());
  }
}

// Dense H x W x C image with row-major (row, column, channel) flattening.
// Clean images live in [0, 1]; latents and noisy observations are unbounded.
template <typename Scalar_>
class Image {
 public:
  using Scalar = Scalar_;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Plane = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Image() = default;

  explicit Image(const ImageShape& shape)
      : shape_(shape), data_(Vector::Zero(shape.size())) {
    validate_shape(shape_);
  }

  Image(const ImageShape& shape, Vector data)
      : shape_(shape), data_(std::move(data)) {
    validate_shape(shape_);
    if (data_.size() != shape_.size()) {
      throw DimensionError("image data length " +
                           std::to_string(data_.size()) +
                           " does not match shape " + shape_.to_string());
    }
  }

  Image(int height, int width, int channels)
      : Image(ImageShape{height, width, channels}) {}

  static Image constant(const ImageShape& shape, Scalar value) {
    return Image(shape, Vector::Constant(shape.size(), value));
  }

  const ImageShape& shape() const { return shape_; }
  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  int channels() const { return shape_.channels; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  const Vector& data() const { return data_; }
  Vector& data() { return data_; }

  Index offset(int row, int col, int ch) const {
    return (static_cast<Index>(row) * shape_.width + col) * shape_.channels +
           ch;
  }
  Scalar operator()(int row, int col, int ch = 0) const {
    return data_[offset(row, col, ch)];
  }
  Scalar& operator()(int row, int col, int ch = 0) {
    return data_[offset(row, col, ch)];
  }

  bool same_shape(const Image& other) const { return shape_ == other.shape_; }

  bool is_clean() const {
    return data_.size() == 0 ||
           (data_.minCoeff() >= Scalar(0) && data_.maxCoeff() <= Scalar(1));
  }

  Scalar norm() const { return data_.norm(); }

  Image clipped() const {
    return Image(shape_, data_.cwiseMax(Scalar(0)).cwiseMin(Scalar(1)));
  }

  // One channel as an H x W matrix.
  Plane plane(int ch) const {
    Plane out(shape_.height, shape_.width);
    for (int r = 0; r < shape_.height; ++r) {
      for (int c = 0; c < shape_.width; ++c) out(r, c) = (*this)(r, c, ch);
    }
    return out;
  }

  void set_plane(int ch, const Plane& plane) {
    for (int r = 0; r < shape_.height; ++r) {
      for (int c = 0; c < shape_.width; ++c) (*this)(r, c, ch) = plane(r, c);
    }
  }

  template <typename NewScalar>
  Image<NewScalar> cast() const {
    return Image<NewScalar>(shape_, data_.template cast<NewScalar>());
  }

 private:
  ImageShape shape_{};
  Vector data_;
};

using ImageTensor = Image<double>;

template <typename Scalar>
void require_same_shape(const Image<Scalar>& a, const Image<Scalar>& b,
                        const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": shape mismatch " +
                         a.shape().to_string() + " vs " +
                         b.shape().to_string());
  }
}

template <typename Scalar>
void require_clean(const Image<Scalar>& x, const char* what) {
  if (!x.is_clean()) {
    throw ArgumentError(std::string(what) +
                        ": expected a clean image with values in [0, 1]");
  }
}

}  // namespace privrecon
