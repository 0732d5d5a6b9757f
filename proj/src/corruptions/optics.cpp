#include "histobench/optics.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace histobench::optics {
namespace {

// sin/cos in degrees, exact at multiples of 90° so that axis-aligned kernels
// carry no spurious off-axis weight.
std::pair<double, double> sincos_deg(double angle_deg) {
  const double quarter = angle_deg / 90.0;
  if (quarter == std::round(quarter)) {
    static constexpr double kSin[] = {0.0, 1.0, 0.0, -1.0};
    static constexpr double kCos[] = {1.0, 0.0, -1.0, 0.0};
    const auto q = static_cast<long>(std::round(quarter));
    const long idx = ((q % 4) + 4) % 4;
    return {kSin[idx], kCos[idx]};
  }
  const double rad = angle_deg * std::numbers::pi / 180.0;
  return {std::sin(rad), std::cos(rad)};
}

void normalize(Eigen::MatrixXd& w) {
  const double total = w.sum();
  if (!(total > 0.0)) {
    throw NumericError("kernel has no positive mass");
  }
  w /= total;
}

struct Tap {
  Eigen::Index dy;
  Eigen::Index dx;
  double weight;
};

std::vector<Tap> nonzero_taps(const ConvKernel& kernel) {
  std::vector<Tap> taps;
  const Eigen::Index h = kernel.half();
  for (Eigen::Index i = 0; i < kernel.size(); ++i) {
    for (Eigen::Index j = 0; j < kernel.size(); ++j) {
      if (kernel.weights(i, j) != 0.0) {
        taps.push_back({i - h, j - h, kernel.weights(i, j)});
      }
    }
  }
  return taps;
}

// Plane padded by `pad` on every side using reflect-101.
Plane<double> pad_reflect(const Plane<double>& plane, Eigen::Index pad) {
  const Eigen::Index h = plane.rows();
  const Eigen::Index w = plane.cols();
  Plane<double> out(h + 2 * pad, w + 2 * pad);
  for (Eigen::Index y = 0; y < out.rows(); ++y) {
    const Eigen::Index sy = reflect101(y - pad, h);
    for (Eigen::Index x = 0; x < out.cols(); ++x) {
      out(y, x) = plane(sy, reflect101(x - pad, w));
    }
  }
  return out;
}

} // namespace

ConvKernel identity_kernel() { return {Eigen::MatrixXd::Ones(1, 1)}; }

ConvKernel line_kernel(int length, double sigma, double angle_deg) {
  if (length < 1) {
    throw ArgumentError("line kernel length must be at least 1");
  }
  if (!(sigma > 0.0)) {
    throw ArgumentError("line kernel spread must be positive");
  }
  if (length == 1) {
    return identity_kernel();
  }
  const double centre = 0.5 * static_cast<double>(length - 1);
  const auto half = static_cast<Eigen::Index>(std::ceil(centre)) + 1;
  const Eigen::Index size = 2 * half + 1;
  const auto [s, c] = sincos_deg(angle_deg);

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(size, size);
  for (int j = 0; j < length; ++j) {
    const double t = static_cast<double>(j) - centre;
    const double tap = std::exp(-(t * t) / (2.0 * sigma * sigma));
    // Image rows grow downwards, so a positive angle tilts the segment up.
    const double px = t * c + static_cast<double>(half);
    const double py = -t * s + static_cast<double>(half);
    const double fx = std::floor(px);
    const double fy = std::floor(py);
    const double ax = px - fx;
    const double ay = py - fy;
    const auto x0 = static_cast<Eigen::Index>(fx);
    const auto y0 = static_cast<Eigen::Index>(fy);
    const double corners[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
    const Eigen::Index dxs[4] = {0, 1, 0, 1};
    const Eigen::Index dys[4] = {0, 0, 1, 1};
    for (int k = 0; k < 4; ++k) {
      if (corners[k] > 0.0) {
        w(y0 + dys[k], x0 + dxs[k]) += tap * corners[k];
      }
    }
  }
  normalize(w);
  return {std::move(w)};
}

Eigen::VectorXd gaussian_taps(double sigma) {
  if (!(sigma > 0.0)) {
    return Eigen::VectorXd::Ones(1);
  }
  const auto half = static_cast<Eigen::Index>(std::ceil(3.0 * sigma));
  Eigen::VectorXd taps(2 * half + 1);
  for (Eigen::Index i = -half; i <= half; ++i) {
    const auto d = static_cast<double>(i);
    taps[i + half] = std::exp(-(d * d) / (2.0 * sigma * sigma));
  }
  return taps / taps.sum();
}

ConvKernel disk_kernel(int radius, double alias_blur) {
  if (radius < 1) {
    throw ArgumentError("disk kernel radius must be at least 1");
  }
  if (!(alias_blur >= 0.0)) {
    throw ArgumentError("disk kernel alias blur must be non-negative");
  }
  const Eigen::Index size = 2 * radius + 1;
  const double r2 = static_cast<double>(radius) * radius;
  Eigen::MatrixXd disk = Eigen::MatrixXd::Zero(size, size);
  for (Eigen::Index i = 0; i < size; ++i) {
    for (Eigen::Index j = 0; j < size; ++j) {
      const auto dy = static_cast<double>(i - radius);
      const auto dx = static_cast<double>(j - radius);
      if (dx * dx + dy * dy <= r2) {
        disk(i, j) = 1.0;
      }
    }
  }
  if (alias_blur > 0.0) {
    // Zero-padded separable smoothing on the same grid.
    const Eigen::VectorXd g = gaussian_taps(alias_blur);
    const Eigen::Index gh = g.size() / 2;
    Eigen::MatrixXd tmp = Eigen::MatrixXd::Zero(size, size);
    for (Eigen::Index i = 0; i < size; ++i) {
      for (Eigen::Index j = 0; j < size; ++j) {
        double acc = 0.0;
        for (Eigen::Index k = -gh; k <= gh; ++k) {
          const Eigen::Index jj = j + k;
          if (jj >= 0 && jj < size) {
            acc += g[k + gh] * disk(i, jj);
          }
        }
        tmp(i, j) = acc;
      }
    }
    for (Eigen::Index i = 0; i < size; ++i) {
      for (Eigen::Index j = 0; j < size; ++j) {
        double acc = 0.0;
        for (Eigen::Index k = -gh; k <= gh; ++k) {
          const Eigen::Index ii = i + k;
          if (ii >= 0 && ii < size) {
            acc += g[k + gh] * tmp(ii, j);
          }
        }
        disk(i, j) = acc;
      }
    }
  }
  normalize(disk);
  return {std::move(disk)};
}

Plane<double> correlate_plane(const Plane<double>& plane, const ConvKernel& kernel) {
  const Eigen::Index h = kernel.half();
  const Plane<double> padded = pad_reflect(plane, h);
  const std::vector<Tap> taps = nonzero_taps(kernel);
  Plane<double> out = Plane<double>::Zero(plane.rows(), plane.cols());
  for (const Tap& tap : taps) {
    out += tap.weight * padded.block(h + tap.dy, h + tap.dx, plane.rows(), plane.cols());
  }
  return out;
}

ImageTensor convolve2d(const ImageTensor& image, const ConvKernel& kernel) {
  if (kernel.size() % 2 == 0 || kernel.weights.cols() != kernel.size()) {
    throw ArgumentError("kernel must be square with odd size");
  }
  if (kernel.size() > image.height() || kernel.size() > image.width()) {
    throw ArgumentError("kernel is larger than the image");
  }
  ImageTensor out(image.height(), image.width());
  for (int c = 0; c < 3; ++c) {
    const Plane<double> blurred = correlate_plane(image.plane(c).cast<double>(), kernel);
    out.set_plane(c, blurred.max(0.0).min(1.0).cast<float>());
  }
  return out;
}

Plane<double> gaussian_blur_plane(const Plane<double>& plane, double sigma) {
  if (!(sigma > 0.0)) {
    return plane;
  }
  const Eigen::VectorXd g = gaussian_taps(sigma);
  const Eigen::Index gh = g.size() / 2;
  const Eigen::Index rows = plane.rows();
  const Eigen::Index cols = plane.cols();
  Plane<double> tmp(rows, cols);
  for (Eigen::Index y = 0; y < rows; ++y) {
    for (Eigen::Index x = 0; x < cols; ++x) {
      double acc = 0.0;
      for (Eigen::Index k = -gh; k <= gh; ++k) {
        acc += g[k + gh] * plane(y, reflect101(x + k, cols));
      }
      tmp(y, x) = acc;
    }
  }
  Plane<double> out(rows, cols);
  for (Eigen::Index y = 0; y < rows; ++y) {
    for (Eigen::Index x = 0; x < cols; ++x) {
      double acc = 0.0;
      for (Eigen::Index k = -gh; k <= gh; ++k) {
        acc += g[k + gh] * tmp(reflect101(y + k, rows), x);
      }
      out(y, x) = acc;
    }
  }
  return out;
}

ImageTensor motion_blur(const ImageTensor& image, int length, double sigma, Rng64& rng) {
  const double angle = rng.uniform(-45.0, 45.0);
  return convolve2d(image, line_kernel(length, sigma, angle));
}

ImageTensor defocus_blur(const ImageTensor& image, int radius, double alias_blur) {
  return convolve2d(image, disk_kernel(radius, alias_blur));
}

} // namespace histobench::optics
