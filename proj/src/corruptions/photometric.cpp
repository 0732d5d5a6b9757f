#include "histobench/photometric.hpp"

#include <algorithm>

namespace histobench::photometric {

ImageTensor gaussian_noise(const ImageTensor& image, double sigma, Rng64& rng) {
  if (!(sigma >= 0.0)) {
    throw ArgumentError("gaussian noise sigma must be non-negative");
  }
  ImageTensor out = image;
  float* v = out.data();
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double noisy = static_cast<double>(v[i]) + sigma * rng.gaussian();
    v[i] = static_cast<float>(std::clamp(noisy, 0.0, 1.0));
  }
  return out;
}

ImageTensor shot_noise(const ImageTensor& image, double c, Rng64& rng) {
  if (!(c > 0.0)) {
    throw ArgumentError("shot noise photon-count factor must be positive");
  }
  ImageTensor out = image;
  float* v = out.data();
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const long counts = rng.poisson(static_cast<double>(v[i]) * c);
    v[i] = static_cast<float>(std::clamp(static_cast<double>(counts) / c, 0.0, 1.0));
  }
  return out;
}

ImageTensor contrast(const ImageTensor& image, double f) {
  if (!(f > 0.0)) {
    throw ArgumentError("contrast factor must be positive");
  }
  const double mean = image.pixels().cast<double>().mean();
  ImageTensor::PixelMatrix out =
      ((image.pixels().cast<double>().array() - mean) * f + mean).max(0.0).min(1.0).cast<float>().matrix();
  return {image.height(), image.width(), std::move(out)};
}

ImageTensor brightness(const ImageTensor& image, double delta) {
  ImageTensor::PixelMatrix out =
      (image.pixels().cast<double>().array() + delta).max(0.0).min(1.0).cast<float>().matrix();
  return {image.height(), image.width(), std::move(out)};
}

} // namespace histobench::photometric
