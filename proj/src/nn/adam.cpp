#include "histobench/nn/adam.hpp"

#include <cmath>

namespace histobench::nn {

void adam_step(const std::vector<Param*>& params, const AdamOptions& options, int step) {
  if (step < 1) {
    throw ArgumentError("adam step counter starts at 1");
  }
  if (!(options.lr >= 0.0) || !(options.eps > 0.0) || options.beta1 < 0.0 || options.beta1 >= 1.0 ||
      options.beta2 < 0.0 || options.beta2 >= 1.0) {
    throw ArgumentError("invalid Adam hyperparameters");
  }
  const double c1 = 1.0 - std::pow(options.beta1, step);
  const double c2 = 1.0 - std::pow(options.beta2, step);
  for (Param* p : params) {
    p->moment1 = options.beta1 * p->moment1 + (1.0 - options.beta1) * p->grad;
    p->moment2 = (options.beta2 * p->moment2.array() + (1.0 - options.beta2) * p->grad.array().square()).matrix();
    const auto m_hat = p->moment1.array() / c1;
    const auto v_hat = p->moment2.array() / c2;
    p->value.array() -= options.lr * m_hat / (v_hat.sqrt() + options.eps);
  }
}

void zero_grads(const std::vector<Param*>& params) {
  for (Param* p : params) {
    p->zero_grad();
  }
}

} // namespace histobench::nn
