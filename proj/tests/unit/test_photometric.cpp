#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "histobench/photometric.hpp"

using namespace histobench;
using namespace histobench::photometric;

namespace {

double element_mean(const ImageTensor& img) { return img.pixels().cast<double>().mean(); }

double element_std(const ImageTensor& img) {
  const Eigen::ArrayXd v = Eigen::Map<const Eigen::ArrayXf>(img.data(), img.size()).cast<double>();
  const double m = v.mean();
  return std::sqrt((v - m).square().sum() / static_cast<double>(v.size() - 1));
}

double dispersion(const ImageTensor& img) {
  const double m = element_mean(img);
  return (img.pixels().cast<double>().array() - m).abs().mean();
}

} // namespace


TEST(Oracles, ClippedPoissonAndGaussian) {
  // λ = 1.5, c = 3: closed form P(0)·0 + P(1)/3 + P(2)·2/3 + P(≥3)·1.
  const double e = std::exp(-1.5);
  const double p1 = e * 1.5;
  const double p2 = e * 1.125;
  const double expected = p1 / 3.0 + p2 * 2.0 / 3.0 + (1.0 - e - p1 - p2);
  EXPECT_NEAR(histobench::testing::clipped_poisson_mean(1.5, 3.0), expected, 1e-12);
  // An unclipped-ish case: tiny σ behaves like the plain Gaussian.
  EXPECT_NEAR(histobench::testing::clipped_gaussian_std(0.5, 0.05), 0.05, 1e-6);
}

TEST(GaussianNoise, ZeroSigmaIsIdentity) {
  const ImageTensor x = histobench::testing::random_image(8, 8, 1);
  Rng64 rng(1);
  EXPECT_EQ(gaussian_noise(x, 0.0, rng), x);
  EXPECT_THROW(gaussian_noise(x, -1.0, rng), ArgumentError);
}

TEST(GaussianNoise, StdMatchesClippedGaussianOracle) {
  const ImageTensor gray(256, 256, 0.5f);
  Rng64 rng(derive_image_seed(42, "gray"));
  const ImageTensor y = gaussian_noise(gray, 0.38, rng);
  const double target = histobench::testing::clipped_gaussian_std(0.5, 0.38);
  EXPECT_NEAR(element_std(y), target, 0.05 * target);
  EXPECT_TRUE(y.is_valid());
}

TEST(GaussianNoise, TraversalOrderIsRowMajorChannelInnermost) {
  const ImageTensor x(2, 2, 0.5f);
  Rng64 rng(6);
  const ImageTensor y = gaussian_noise(x, 0.01, rng);
  Rng64 ref(6);
  for (Eigen::Index i = 0; i < 2; ++i) {
    for (Eigen::Index j = 0; j < 2; ++j) {
      for (int c = 0; c < 3; ++c) {
        const double expected = std::clamp(0.5 + 0.01 * ref.gaussian(), 0.0, 1.0);
        EXPECT_EQ(y(i, j, c), static_cast<float>(expected));
      }
    }
  }
}

TEST(ShotNoise, ZeroImageStaysZero) {
  Rng64 rng(2);
  const ImageTensor y = shot_noise(ImageTensor(16, 16, 0.0f), 3.0, rng);
  EXPECT_EQ(y.pixels().maxCoeff(), 0.0f);
  EXPECT_THROW(shot_noise(ImageTensor(2, 2), 0.0, rng), ArgumentError);
}

TEST(ShotNoise, MeanMatchesPmfOracleAndValuesOnGrid) {
  const ImageTensor gray(256, 256, 0.5f);
  Rng64 rng(derive_image_seed(42, "gray"));
  const ImageTensor y = shot_noise(gray, 3.0, rng);
  EXPECT_NEAR(element_mean(y), histobench::testing::clipped_poisson_mean(1.5, 3.0), 0.02);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double k = static_cast<double>(y.data()[i]) * 3.0;
    ASSERT_NEAR(k, std::round(k), 1e-5);
    ASSERT_LE(y.data()[i], 1.0f);
  }
}

TEST(ShotNoise, Deterministic) {
  const ImageTensor x = histobench::testing::random_image(16, 16, 3);
  Rng64 a(10);
  Rng64 b(10);
  EXPECT_EQ(shot_noise(x, 3.0, a), shot_noise(x, 3.0, b));
}

TEST(Contrast, IdentityConstantAndScaling) {
  const ImageTensor x = histobench::testing::random_image(8, 8, 4);
  EXPECT_EQ(contrast(x, 1.0), x);
  const ImageTensor flat(4, 4, 0.3f);
  EXPECT_LE(max_abs_diff(contrast(flat, 0.05), flat), 1e-7);

  const double mu = element_mean(x);
  const ImageTensor y = contrast(x, 0.05);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(std::abs(y.data()[i] - mu), 0.05 * std::abs(x.data()[i] - mu), 1e-6);
  }
  EXPECT_THROW(contrast(x, 0.0), ArgumentError);
}

TEST(Contrast, DispersionMonotoneInFactor) {
  const ImageTensor x = histobench::testing::random_image(16, 16, 5);
  double previous = 0.0;
  for (const double f : {0.05, 0.2, 0.5, 0.8, 1.0}) {
    const double d = dispersion(contrast(x, f));
    EXPECT_GE(d + 1e-9, previous);
    previous = d;
  }
}

TEST(Brightness, ShiftAndClamp) {
  const ImageTensor x = histobench::testing::random_image(8, 8, 6);
  EXPECT_EQ(brightness(x, 0.0), x);
  EXPECT_EQ(brightness(ImageTensor(1, 1, 0.7f), 0.5)(0, 0, 0), 1.0f);
  EXPECT_NEAR(brightness(ImageTensor(1, 1, 0.2f), 0.5)(0, 0, 0), 0.7f, 1e-7);
}

TEST(Brightness, ComposesWithoutClipping) {
  const ImageTensor x = histobench::testing::random_image(8, 8, 7, 0.2f, 0.5f);
  EXPECT_LE(max_abs_diff(brightness(brightness(x, 0.1), 0.15), brightness(x, 0.25)), 1e-6);
}
