#pragma once

#include <Eigen/Dense>

#include "histobench/image.hpp"
#include "histobench/rng.hpp"

namespace histobench::optics {

/// Odd-sized, non-negative weights summing to one. Applied as a correlation
/// (weights(dy+h, dx+h) multiplies the input at offset (dy, dx)).
struct ConvKernel {
  Eigen::MatrixXd weights;

  Eigen::Index size() const { return weights.rows(); }
  Eigen::Index half() const { return weights.rows() / 2; }
};

/// Reflect-101 index into [0, n): -1 → 1, n → n-2, periodic beyond that.
inline Eigen::Index reflect101(Eigen::Index i, Eigen::Index n) {
  if (n == 1) {
    return 0;
  }
  const Eigen::Index period = 2 * (n - 1);
  i %= period;
  if (i < 0) {
    i += period;
  }
  return i < n ? i : period - i;
}

ConvKernel identity_kernel();

/// Gaussian-weighted segment of `length` taps along direction `angle_deg`
/// (0° horizontal, 90° vertical), bilinearly splatted and renormalised.
ConvKernel line_kernel(int length, double sigma, double angle_deg);

/// Binary disk on a (2·radius+1)² grid, optionally smoothed by a Gaussian of
/// σ = alias_blur, renormalised.
ConvKernel disk_kernel(int radius, double alias_blur);

/// Normalised 1-D Gaussian with half-width ceil(3σ).
Eigen::VectorXd gaussian_taps(double sigma);

/// Per-channel 2-D correlation with reflect-101 borders; output clipped to [0,1].
ImageTensor convolve2d(const ImageTensor& image, const ConvKernel& kernel);

/// Single-plane correlation without clipping. Unlike convolve2d the kernel may
/// exceed the plane; reflection is applied periodically.
Plane<double> correlate_plane(const Plane<double>& plane, const ConvKernel& kernel);

/// Separable Gaussian blur of a plane (reflect-101). σ ≤ 0 returns the input.
Plane<double> gaussian_blur_plane(const Plane<double>& plane, double sigma);

/// θ ∼ U(−45°, 45°) drawn once, then convolution with line_kernel(r, σ, θ).
ImageTensor motion_blur(const ImageTensor& image, int length, double sigma, Rng64& rng);

ImageTensor defocus_blur(const ImageTensor& image, int radius, double alias_blur);

inline constexpr int kMotionLength = 20;
inline constexpr double kMotionSigma = 15.0;
inline constexpr int kDefocusRadius = 10;
inline constexpr double kDefocusAlias = 0.5;

} // namespace histobench::optics
