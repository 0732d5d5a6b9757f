#pragma once

#include <vector>

#include "histobench/nn/tensor.hpp"

namespace histobench::nn {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update in place. `step` counts from 1.
void adam_step(const std::vector<Param*>& params, const AdamOptions& options, int step);

void zero_grads(const std::vector<Param*>& params);

} // namespace histobench::nn
