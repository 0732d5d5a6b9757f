#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>

#include "histobench/errors.hpp"

namespace histobench {

/// Single-channel H×W plane, row-major so that `plane(y, x)` walks memory in
/// the same order as the interleaved image.
template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// H×W×3 image, interleaved row-major (channel innermost). Values are expected
/// in [0,1]; `is_valid()` checks that.
template <typename Scalar>
class Image {
public:
  using PixelMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;
  static constexpr int kChannels = 3;

  Image() = default;
  Image(Eigen::Index height, Eigen::Index width, Scalar fill = Scalar(0))
      : height_(height), width_(width), data_(PixelMatrix::Constant(height * width, 3, fill)) {
    if (height < 1 || width < 1) {
      throw ArgumentError("image dimensions must be positive");
    }
  }

  /// Takes ownership of an (H·W)×3 pixel matrix.
  Image(Eigen::Index height, Eigen::Index width, PixelMatrix pixels)
      : height_(height), width_(width), data_(std::move(pixels)) {
    if (height < 1 || width < 1 || data_.rows() != height * width) {
      throw ArgumentError("pixel matrix does not match image dimensions");
    }
  }

  Eigen::Index height() const { return height_; }
  Eigen::Index width() const { return width_; }
  Eigen::Index size() const { return data_.size(); }
  Eigen::Index pixel_count() const { return height_ * width_; }

  Scalar& operator()(Eigen::Index y, Eigen::Index x, int c) { return data_(y * width_ + x, c); }
  Scalar operator()(Eigen::Index y, Eigen::Index x, int c) const { return data_(y * width_ + x, c); }

  /// One row per pixel, one column per channel.
  PixelMatrix& pixels() { return data_; }
  const PixelMatrix& pixels() const { return data_; }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Plane<Scalar> plane(int c) const {
    Plane<Scalar> out(height_, width_);
    for (Eigen::Index i = 0; i < pixel_count(); ++i) {
      out.data()[i] = data_(i, c);
    }
    return out;
  }

  void set_plane(int c, const Plane<Scalar>& p) {
    if (p.rows() != height_ || p.cols() != width_) {
      throw ArgumentError("plane dimensions do not match image");
    }
    for (Eigen::Index i = 0; i < pixel_count(); ++i) {
      data_(i, c) = p.data()[i];
    }
  }

  bool is_valid() const {
    for (Eigen::Index i = 0; i < data_.size(); ++i) {
      const Scalar v = data_.data()[i];
      if (!std::isfinite(v) || v < Scalar(0) || v > Scalar(1)) {
        return false;
      }
    }
    return data_.rows() == height_ * width_;
  }

  void clip() { data_ = data_.cwiseMax(Scalar(0)).cwiseMin(Scalar(1)); }

  template <typename Other>
  Image<Other> cast() const {
    return Image<Other>(height_, width_, data_.template cast<Other>().eval());
  }

  friend bool operator==(const Image& a, const Image& b) {
    return a.height_ == b.height_ && a.width_ == b.width_ && a.data_ == b.data_;
  }

private:
  Eigen::Index height_ = 0;
  Eigen::Index width_ = 0;
  PixelMatrix data_;
};

using ImageTensor = Image<float>;

/// Largest absolute elementwise difference; dimensions must match.
template <typename Scalar>
double max_abs_diff(const Image<Scalar>& a, const Image<Scalar>& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw ArgumentError("image dimensions differ");
  }
  return static_cast<double>((a.pixels() - b.pixels()).cwiseAbs().maxCoeff());
}

/// Bilinear resample (pixel-center aligned). Used to bring arbitrary dataset
/// images to the encoder resolution.
ImageTensor resize_bilinear(const ImageTensor& image, Eigen::Index height, Eigen::Index width);

} // namespace histobench
