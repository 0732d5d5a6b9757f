#include "histobench/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "histobench/rng.hpp"

namespace histobench::nn {

bool GradCheckReport::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const GradCheckEntry& e) { return e.passed; });
}

double GradCheckReport::max_relative_error() const {
  double worst = 0.0;
  for (const auto& e : entries) {
    worst = std::max(worst, e.max_relative_error);
  }
  return worst;
}

namespace {

std::vector<Eigen::Index> sample_coordinates(Eigen::Index size, int limit, Rng64& rng) {
  std::vector<Eigen::Index> all(static_cast<std::size_t>(size));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  if (size <= limit) {
    return all;
  }
  // Partial Fisher-Yates: the first `limit` slots are a uniform sample.
  for (int i = 0; i < limit; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(i, size - 1));
    std::swap(all[static_cast<std::size_t>(i)], all[j]);
  }
  all.resize(static_cast<std::size_t>(limit));
  return all;
}

} // namespace

GradCheckReport grad_check(const std::function<double()>& fn, const std::vector<Param*>& params,
                           const GradCheckOptions& options) {
  if (!(options.h > 0.0) || !(options.tol > 0.0) || options.max_coordinates < 1) {
    throw ArgumentError("grad_check: h, tol and max_coordinates must be positive");
  }
  Rng64 rng(options.sample_seed);
  GradCheckReport report;
  for (Param* p : params) {
    GradCheckEntry entry;
    entry.name = p->name;
    for (const Eigen::Index idx : sample_coordinates(p->value.size(), options.max_coordinates, rng)) {
      double& theta = p->value.data()[idx];
      const double original = theta;
      theta = original + options.h;
      const double f_plus = fn();
      theta = original - options.h;
      const double f_minus = fn();
      theta = original;
      const double numeric = (f_plus - f_minus) / (2.0 * options.h);
      const double analytic = p->grad.data()[idx];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), options.denominator_floor});
      const double rel = std::abs(numeric - analytic) / denom;
      ++entry.coordinates_checked;
      if (!(rel < options.tol)) {
        ++entry.coordinates_failed;
      }
      entry.max_relative_error = std::max(entry.max_relative_error, std::isfinite(rel) ? rel : INFINITY);
    }
    entry.passed = entry.coordinates_failed == 0;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

} // namespace histobench::nn
