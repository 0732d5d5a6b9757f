#include "histobench/nn/layers.hpp"

#include <cmath>
#include <numbers>

namespace histobench::nn {

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, Rng64& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = stddev * rng.gaussian();
  }
  return m;
}

LoraPair LoraPair::init(const std::string& name, Eigen::Index d_in, Eigen::Index d_out, int rank, double alpha,
                        Rng64& rng, bool allow_full_rank) {
  if (rank < 1) {
    throw ArgumentError("LoRA rank must be at least 1");
  }
  if (!allow_full_rank && 2 * static_cast<Eigen::Index>(rank) > d_in) {
    throw ArgumentError("LoRA rank must not exceed d_in/2");
  }
  if (allow_full_rank && rank > d_in) {
    throw ArgumentError("LoRA rank must not exceed d_in");
  }
  LoraPair pair;
  pair.rank = rank;
  pair.alpha = alpha;
  pair.a = Param(name + ".lora_a", gaussian_matrix(d_in, rank, 0.02, rng));
  pair.b = Param(name + ".lora_b", Matrix::Zero(rank, d_out));
  return pair;
}

LinearLora::LinearLora(Matrix weight, std::optional<Eigen::RowVectorXd> bias_row, LoraPair pair)
    : lora(std::move(pair)), weight_(std::move(weight)) {
  if (lora.a.value.rows() != weight_.rows() || lora.b.value.cols() != weight_.cols() ||
      lora.a.value.cols() != lora.b.value.rows()) {
    throw ArgumentError("LoRA factors do not match the frozen weight shape");
  }
  if (bias_row) {
    if (bias_row->size() != weight_.cols()) {
      throw ArgumentError("bias length does not match output features");
    }
    bias.emplace(lora.a.name.substr(0, lora.a.name.rfind('.')) + ".bias", Matrix(*bias_row));
  }
}

Matrix linear_lora_forward(const Matrix& x, const Matrix& weight, const LoraPair& lora,
                           const std::optional<Eigen::RowVectorXd>& bias) {
  if (x.cols() != weight.rows() || lora.a.value.rows() != weight.rows() || lora.b.value.cols() != weight.cols()) {
    throw ArgumentError("linear_lora_forward: shape mismatch");
  }
  Matrix y = x * weight;
  y.noalias() += lora.scale() * ((x * lora.a.value) * lora.b.value);
  if (bias) {
    y.rowwise() += *bias;
  }
  return y;
}

Matrix LinearLora::forward(const Matrix& x) {
  if (x.cols() != weight_.rows()) {
    throw ArgumentError("LinearLora: input has " + std::to_string(x.cols()) + " features, expected " +
                        std::to_string(weight_.rows()));
  }
  x_cache_ = x;
  xa_cache_ = x * lora.a.value;
  Matrix y = x * weight_;
  y.noalias() += lora.scale() * (xa_cache_ * lora.b.value);
  if (bias) {
    y.rowwise() += bias->value.row(0);
  }
  return y;
}

Matrix LinearLora::backward(const Matrix& grad_out) {
  const double s = lora.scale();
  const Matrix grad_xa = grad_out * lora.b.value.transpose();
  lora.a.grad.noalias() += s * (x_cache_.transpose() * grad_xa);
  lora.b.grad.noalias() += s * (xa_cache_.transpose() * grad_out);
  if (bias) {
    bias->grad.row(0) += grad_out.colwise().sum();
  }
  Matrix dx = grad_out * weight_.transpose();
  dx.noalias() += s * (grad_xa * lora.a.value.transpose());
  return dx;
}

LayerNorm::LayerNorm(const std::string& name, Eigen::Index dim)
    : gamma(name + ".gamma", Matrix::Ones(1, dim)), beta(name + ".beta", Matrix::Zero(1, dim)) {}

Matrix LayerNorm::forward(const Matrix& x) {
  if (x.cols() != gamma.value.cols()) {
    throw ArgumentError("LayerNorm: feature dimension mismatch");
  }
  const auto d = static_cast<double>(x.cols());
  const Eigen::VectorXd mean = x.rowwise().mean();
  Matrix centered = x.colwise() - mean;
  const Eigen::VectorXd var = centered.array().square().rowwise().sum() / d;
  inv_std_ = (var.array() + kEps).rsqrt();
  xhat_ = centered.array().colwise() * inv_std_.array();
  Matrix y = xhat_.array().rowwise() * gamma.value.row(0).array();
  y.rowwise() += beta.value.row(0);
  return y;
}

Matrix LayerNorm::backward(const Matrix& grad_out) {
  const auto d = static_cast<double>(grad_out.cols());
  gamma.grad.row(0) += (grad_out.array() * xhat_.array()).colwise().sum().matrix();
  beta.grad.row(0) += grad_out.colwise().sum();
  const Matrix dxhat = grad_out.array().rowwise() * gamma.value.row(0).array();
  const Eigen::VectorXd sum_dxhat = dxhat.rowwise().sum();
  const Eigen::VectorXd sum_dxhat_xhat = (dxhat.array() * xhat_.array()).rowwise().sum();
  Matrix dx = (d * dxhat.array()).matrix();
  dx.colwise() -= sum_dxhat;
  dx -= (xhat_.array().colwise() * sum_dxhat_xhat.array()).matrix();
  return (dx.array().colwise() * (inv_std_.array() / d)).matrix();
}

namespace {

LinearLora make_projection(const std::string& name, Eigen::Index d_in, Eigen::Index d_out, bool with_bias,
                           int lora_rank, double lora_alpha, Rng64& rng) {
  Matrix w = gaussian_matrix(d_in, d_out, 1.0 / std::sqrt(static_cast<double>(d_in)), rng);
  std::optional<Eigen::RowVectorXd> bias;
  if (with_bias) {
    bias = Eigen::RowVectorXd(gaussian_matrix(1, d_out, 0.02, rng).row(0));
  }
  LoraPair lora = LoraPair::init(name, d_in, d_out, lora_rank, lora_alpha, rng);
  return {std::move(w), std::move(bias), std::move(lora)};
}

} // namespace

MultiHeadAttention::MultiHeadAttention(const std::string& name, Eigen::Index dim, int heads, int lora_rank,
                                       double lora_alpha, Rng64& rng)
    : heads_(heads) {
  if (heads < 1 || dim % heads != 0) {
    throw ArgumentError("attention: dim must be divisible by the number of heads");
  }
  query = make_projection(name + ".q", dim, dim, true, lora_rank, lora_alpha, rng);
  key = make_projection(name + ".k", dim, dim, true, lora_rank, lora_alpha, rng);
  value = make_projection(name + ".v", dim, dim, true, lora_rank, lora_alpha, rng);
  output = make_projection(name + ".o", dim, dim, true, lora_rank, lora_alpha, rng);
}

Matrix MultiHeadAttention::forward(const Matrix& x, Eigen::Index tokens_per_sequence) {
  const Eigen::Index dim = x.cols();
  if (dim % heads_ != 0) {
    throw ArgumentError("attention: dim must be divisible by the number of heads");
  }
  if (tokens_per_sequence < 1 || x.rows() % tokens_per_sequence != 0) {
    throw ArgumentError("attention: rows must be a whole number of sequences");
  }
  tokens_ = tokens_per_sequence;
  const Eigen::Index seqs = x.rows() / tokens_;
  const Eigen::Index dh = dim / heads_;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  q_ = query.forward(x);
  k_ = key.forward(x);
  v_ = value.forward(x);
  attn_.assign(static_cast<std::size_t>(seqs * heads_), Matrix());
  Matrix mixed(x.rows(), dim);
  for (Eigen::Index s = 0; s < seqs; ++s) {
    for (int h = 0; h < heads_; ++h) {
      const auto qs = q_.block(s * tokens_, h * dh, tokens_, dh);
      const auto ks = k_.block(s * tokens_, h * dh, tokens_, dh);
      const auto vs = v_.block(s * tokens_, h * dh, tokens_, dh);
      Matrix& p = attn_[static_cast<std::size_t>(s * heads_ + h)];
      p = softmax_rows((qs * ks.transpose() * inv_sqrt).eval(), 1.0);
      mixed.block(s * tokens_, h * dh, tokens_, dh).noalias() = p * vs;
    }
  }
  return output.forward(mixed);
}

Matrix MultiHeadAttention::backward(const Matrix& grad_out) {
  const Matrix grad_mixed = output.backward(grad_out);
  const Eigen::Index dim = grad_mixed.cols();
  const Eigen::Index seqs = grad_mixed.rows() / tokens_;
  const Eigen::Index dh = dim / heads_;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  Matrix dq = Matrix::Zero(q_.rows(), dim);
  Matrix dk = Matrix::Zero(k_.rows(), dim);
  Matrix dv = Matrix::Zero(v_.rows(), dim);
  for (Eigen::Index s = 0; s < seqs; ++s) {
    for (int h = 0; h < heads_; ++h) {
      const Matrix& p = attn_[static_cast<std::size_t>(s * heads_ + h)];
      const auto go = grad_mixed.block(s * tokens_, h * dh, tokens_, dh);
      const auto qs = q_.block(s * tokens_, h * dh, tokens_, dh);
      const auto ks = k_.block(s * tokens_, h * dh, tokens_, dh);
      const auto vs = v_.block(s * tokens_, h * dh, tokens_, dh);
      const Matrix dp = go * vs.transpose();
      dv.block(s * tokens_, h * dh, tokens_, dh).noalias() = p.transpose() * go;
      const Eigen::VectorXd row_dot = (dp.array() * p.array()).rowwise().sum();
      const Matrix ds = (p.array() * (dp.colwise() - row_dot).array()).matrix() * inv_sqrt;
      dq.block(s * tokens_, h * dh, tokens_, dh).noalias() = ds * ks;
      dk.block(s * tokens_, h * dh, tokens_, dh).noalias() = ds.transpose() * qs;
    }
  }
  Matrix dx = query.backward(dq);
  dx += key.backward(dk);
  dx += value.backward(dv);
  return dx;
}

namespace {
const double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
} // namespace

Matrix gelu(const Matrix& x) {
  return x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); });
}

Matrix gelu_grad(const Matrix& x) {
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return x.unaryExpr([inv_sqrt_2pi](double v) {
    return 0.5 * (1.0 + std::erf(v * kInvSqrt2)) + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
  });
}

TransformerBlock::TransformerBlock(const std::string& name, Eigen::Index dim, int heads, int mlp_ratio,
                                   int lora_rank, double lora_alpha, Rng64& rng)
    : norm1(name + ".ln1", dim),
      attention(name + ".attn", dim, heads, lora_rank, lora_alpha, rng),
      norm2(name + ".ln2", dim) {
  const Eigen::Index hidden = dim * mlp_ratio;
  fc1 = make_projection(name + ".mlp.fc1", dim, hidden, true, lora_rank, lora_alpha, rng);
  fc2 = make_projection(name + ".mlp.fc2", hidden, dim, true, lora_rank, lora_alpha, rng);
}

Matrix TransformerBlock::forward(const Matrix& x, Eigen::Index tokens_per_sequence) {
  Matrix h = x + attention.forward(norm1.forward(x), tokens_per_sequence);
  hidden_pre_ = fc1.forward(norm2.forward(h));
  return h + fc2.forward(gelu(hidden_pre_));
}

Matrix TransformerBlock::backward(const Matrix& grad_out) {
  const Matrix grad_hidden = fc2.backward(grad_out).cwiseProduct(gelu_grad(hidden_pre_));
  const Matrix grad_h = grad_out + norm2.backward(fc1.backward(grad_hidden));
  return grad_h + norm1.backward(attention.backward(grad_h));
}

void collect_lora(LinearLora& layer, std::vector<Param*>& out) {
  out.push_back(&layer.lora.a);
  out.push_back(&layer.lora.b);
}

void collect_norm(LayerNorm& layer, std::vector<Param*>& out) {
  out.push_back(&layer.gamma);
  out.push_back(&layer.beta);
}

void TransformerBlock::collect(std::vector<Param*>& out, AdaptSet set) {
  if (set == AdaptSet::kLora || set == AdaptSet::kBoth) {
    for (LinearLora* l : {&attention.query, &attention.key, &attention.value, &attention.output, &fc1, &fc2}) {
      collect_lora(*l, out);
    }
  }
  if (set == AdaptSet::kLayerNorm || set == AdaptSet::kBoth) {
    collect_norm(norm1, out);
    collect_norm(norm2, out);
  }
}

} // namespace histobench::nn
