#pragma once

#include <optional>
#include <vector>

#include "histobench/nn/tensor.hpp"
#include "histobench/rng.hpp"

namespace histobench::nn {

/// Which parameter families an optimizer touches.
enum class AdaptSet { kLora, kLayerNorm, kBoth };

/// Gaussian(0, std²) matrix from the portable generator.
Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, Rng64& rng);

/// Low-rank update ΔW = (α/r)·A·B with A: d_in×r, B: r×d_out.
struct LoraPair {
  Param a;
  Param b;
  int rank = 0;
  double alpha = 1.0;

  double scale() const { return alpha / static_cast<double>(rank); }
  Matrix delta() const { return scale() * (a.value * b.value); }

  /// A ∼ N(0, 0.02²), B = 0. Requires r ≤ d_in/2 unless `allow_full_rank`.
  static LoraPair init(const std::string& name, Eigen::Index d_in, Eigen::Index d_out, int rank, double alpha,
                       Rng64& rng, bool allow_full_rank = false);
};

/// y = x·(W + (α/r)·A·B) + bias. W is frozen; the LoRA factors and the bias
/// receive gradients.
class LinearLora {
public:
  LinearLora() = default;
  LinearLora(Matrix weight, std::optional<Eigen::RowVectorXd> bias_row, LoraPair lora);

  Matrix forward(const Matrix& x);
  /// Accumulates into the LoRA and bias grads and returns dL/dx.
  Matrix backward(const Matrix& grad_out);

  Eigen::Index in_features() const { return weight_.rows(); }
  Eigen::Index out_features() const { return weight_.cols(); }
  const Matrix& weight() const { return weight_; }
  Matrix& weight() { return weight_; }

  LoraPair lora;
  std::optional<Param> bias;  // 1×d_out

private:
  Matrix weight_;
  Matrix x_cache_;
  Matrix xa_cache_;
};

/// Stateless form of LinearLora::forward.
Matrix linear_lora_forward(const Matrix& x, const Matrix& weight, const LoraPair& lora,
                           const std::optional<Eigen::RowVectorXd>& bias);

/// Per-row standardisation (ε = 1e-5) followed by the affine γ, β.
class LayerNorm {
public:
  static constexpr double kEps = 1e-5;

  LayerNorm() = default;
  LayerNorm(const std::string& name, Eigen::Index dim);

  Matrix forward(const Matrix& x);
  Matrix backward(const Matrix& grad_out);

  Param gamma;
  Param beta;

private:
  Matrix xhat_;
  Eigen::VectorXd inv_std_;
};

/// Multi-head scaled dot-product self-attention over fixed-length sequences
/// stacked row-wise: rows [s·T, (s+1)·T) form sequence s.
class MultiHeadAttention {
public:
  MultiHeadAttention() = default;
  MultiHeadAttention(const std::string& name, Eigen::Index dim, int heads, int lora_rank, double lora_alpha,
                     Rng64& rng);

  Matrix forward(const Matrix& x, Eigen::Index tokens_per_sequence);
  Matrix backward(const Matrix& grad_out);

  int heads() const { return heads_; }

  LinearLora query;
  LinearLora key;
  LinearLora value;
  LinearLora output;

private:
  int heads_ = 1;
  Eigen::Index tokens_ = 0;
  Matrix q_;
  Matrix k_;
  Matrix v_;
  std::vector<Matrix> attn_;  // one T×T matrix per (sequence, head)
};

/// Exact GELU, 0.5·x·(1 + erf(x/√2)).
Matrix gelu(const Matrix& x);
Matrix gelu_grad(const Matrix& x);

/// Pre-norm transformer block: h = x + Attn(LN1(x)); y = h + MLP(LN2(h)).
class TransformerBlock {
public:
  TransformerBlock() = default;
  TransformerBlock(const std::string& name, Eigen::Index dim, int heads, int mlp_ratio, int lora_rank,
                   double lora_alpha, Rng64& rng);

  Matrix forward(const Matrix& x, Eigen::Index tokens_per_sequence);
  Matrix backward(const Matrix& grad_out);

  void collect(std::vector<Param*>& out, AdaptSet set);

  LayerNorm norm1;
  MultiHeadAttention attention;
  LayerNorm norm2;
  LinearLora fc1;
  LinearLora fc2;

private:
  Matrix hidden_pre_;
};

void collect_lora(LinearLora& layer, std::vector<Param*>& out);
void collect_norm(LayerNorm& layer, std::vector<Param*>& out);

} // namespace histobench::nn
