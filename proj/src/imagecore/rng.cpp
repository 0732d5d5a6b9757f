#include "histobench/rng.hpp"

#include <cmath>
#include <numbers>

#include "histobench/errors.hpp"

namespace histobench {

double Rng64::uniform(double lo, double hi) {
  if (!(lo <= hi)) {
    throw ArgumentError("uniform: lo must not exceed hi");
  }
  return lo + next_unit() * (hi - lo);
}

long Rng64::uniform_int(long lo, long hi) {
  if (lo > hi) {
    throw ArgumentError("uniform_int: lo must not exceed hi");
  }
  const double span = static_cast<double>(hi - lo) + 1.0;
  const long k = lo + static_cast<long>(std::floor(next_unit() * span));
  return k > hi ? hi : k;
}

double Rng64::gaussian() {
  if (cached_gaussian_) {
    const double v = *cached_gaussian_;
    cached_gaussian_.reset();
    return v;
  }
  double u1 = next_unit();
  const double u2 = next_unit();
  u1 = std::max(u1, 0x1.0p-53);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_gaussian_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

long Rng64::poisson(double lambda) {
  if (!(lambda >= 0.0)) {
    throw ArgumentError("poisson: rate must be non-negative");
  }
  if (lambda > 100.0) {
    throw ArgumentError("poisson: rate above 100 is not supported by the multiplication method");
  }
  const double limit = std::exp(-lambda);
  long k = 0;
  double product = next_unit();
  while (product > limit) {
    ++k;
    product *= next_unit();
  }
  return k;
}

} // namespace histobench
