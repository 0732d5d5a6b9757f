#pragma once

#include <algorithm>
#include <cmath>

namespace histobench::testing {

/// E[min(P/c, 1)] for P ∼ Poisson(λ), by summing the pmf.
inline double clipped_poisson_mean(double lambda, double c) {
  double pmf = std::exp(-lambda);
  double expectation = 0.0;
  for (int k = 0; k < 200; ++k) {
    expectation += pmf * std::min(static_cast<double>(k) / c, 1.0);
    pmf *= lambda / static_cast<double>(k + 1);
  }
  return expectation;
}

/// Standard deviation of clip(N(μ, σ²), 0, 1) by composite Simpson quadrature
/// on the open interval plus the two boundary atoms.
inline double clipped_gaussian_std(double mu, double sigma) {
  const auto cdf = [&](double x) { return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0))); };
  const auto pdf = [&](double x) {
    const double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
  };
  constexpr int n = 20000;
  const double h = 1.0 / n;
  double m1 = 0.0;
  double m2 = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    m1 += w * x * pdf(x);
    m2 += w * x * x * pdf(x);
  }
  m1 *= h / 3.0;
  m2 *= h / 3.0;
  const double upper_mass = 1.0 - cdf(1.0);
  m1 += upper_mass;
  m2 += upper_mass;
  return std::sqrt(m2 - m1 * m1);
}

} // namespace histobench::testing
