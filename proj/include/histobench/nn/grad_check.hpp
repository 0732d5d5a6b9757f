#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "histobench/nn/tensor.hpp"

namespace histobench::nn {

struct GradCheckEntry {
  std::string name;
  int coordinates_checked = 0;
  int coordinates_failed = 0;
  double max_relative_error = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  bool passed() const;
  double max_relative_error() const;
};

struct GradCheckOptions {
  double h = 1e-5;
  double tol = 1e-4;
  int max_coordinates = 64;
  double denominator_floor = 1e-8;
  std::uint64_t sample_seed = 0;
};

/// Compares each param's `grad` (already filled by the caller) against central
/// differences of `fn`. Params with more than `max_coordinates` entries are
/// sampled without replacement. Values are restored after every probe.
GradCheckReport grad_check(const std::function<double()>& fn, const std::vector<Param*>& params,
                           const GradCheckOptions& options = {});

} // namespace histobench::nn
