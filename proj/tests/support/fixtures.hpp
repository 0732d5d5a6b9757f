#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "histobench/image.hpp"
#include "histobench/rng.hpp"

namespace histobench::testing {

/// Uniform random image in [lo, hi]; drawn from a generator independent of Rng64.
inline ImageTensor random_image(Eigen::Index h, Eigen::Index w, unsigned seed, float lo = 0.0f, float hi = 1.0f) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<float> dist(lo, hi);
  ImageTensor img(h, w);
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    img.data()[i] = dist(gen);
  }
  return img;
}

/// Smooth, tissue-like image: sums of low-frequency sinusoids per channel.
inline ImageTensor smooth_image(Eigen::Index h, Eigen::Index w, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);
  ImageTensor img(h, w);
  for (int c = 0; c < 3; ++c) {
    const double p1 = phase(gen);
    const double p2 = phase(gen);
    for (Eigen::Index y = 0; y < h; ++y) {
      for (Eigen::Index x = 0; x < w; ++x) {
        const double v = 0.55 + 0.2 * std::sin(0.21 * static_cast<double>(x) + p1) +
                         0.15 * std::cos(0.17 * static_cast<double>(y) + p2);
        img(y, x, c) = static_cast<float>(v);
      }
    }
  }
  return img;
}

class TempDir {
public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("histobench-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

} // namespace histobench::testing
