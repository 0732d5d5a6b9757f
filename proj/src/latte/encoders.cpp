#include "histobench/latte/encoders.hpp"

#include <cctype>
#include <cmath>

#include "histobench/rng.hpp"

namespace histobench::latte {

namespace {

void require(bool ok, const char* message) {
  if (!ok) {
    throw ArgumentError(message);
  }
}

} // namespace

Matrix sinusoidal_positions_1d(Eigen::Index length, Eigen::Index dim) {
  require(dim % 2 == 0, "positional code needs an even dimension");
  Matrix pe(length, dim);
  for (Eigen::Index pos = 0; pos < length; ++pos) {
    for (Eigen::Index i = 0; i < dim / 2; ++i) {
      const double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(dim));
      pe(pos, 2 * i) = std::sin(static_cast<double>(pos) * freq);
      pe(pos, 2 * i + 1) = std::cos(static_cast<double>(pos) * freq);
    }
  }
  return pe;
}

Matrix sinusoidal_positions_2d(Eigen::Index grid, Eigen::Index dim) {
  require(dim % 4 == 0, "2-D positional code needs a dimension divisible by 4");
  const Matrix axis = sinusoidal_positions_1d(grid, dim / 2);
  Matrix pe(grid * grid, dim);
  for (Eigen::Index gy = 0; gy < grid; ++gy) {
    for (Eigen::Index gx = 0; gx < grid; ++gx) {
      pe.row(gy * grid + gx) << axis.row(gy), axis.row(gx);
    }
  }
  return pe;
}

void VisionEncoderConfig::validate() const {
  require(patch_size >= 1, "patch_size must be positive");
  require(embed_dim >= 4 && embed_dim % 4 == 0, "embed_dim must be a positive multiple of 4");
  require(depth >= 0, "depth must be non-negative");
  require(heads >= 1 && embed_dim % heads == 0, "embed_dim must be divisible by heads");
  require(mlp_ratio >= 1, "mlp_ratio must be positive");
  require(output_dim >= 1, "output_dim must be positive");
  require(lora_rank >= 1 && 2 * lora_rank <= embed_dim, "lora_rank must lie in [1, embed_dim/2]");
}

ToyVisionEncoder::ToyVisionEncoder(const VisionEncoderConfig& config) : config_(config) {
  config_.validate();
  Rng64 rng(config_.seed);
  const Eigen::Index patch_dim = 3 * config_.patch_size * config_.patch_size;
  patch_weight_ = nn::gaussian_matrix(patch_dim, config_.embed_dim, 1.0 / std::sqrt(double(patch_dim)), rng);
  patch_bias_ = nn::gaussian_matrix(1, config_.embed_dim, 0.02, rng).row(0);
  for (int i = 0; i < config_.depth; ++i) {
    blocks_.emplace_back("vision.block" + std::to_string(i), config_.embed_dim, config_.heads, config_.mlp_ratio,
                         config_.lora_rank, config_.lora_alpha, rng);
  }
  final_norm_ = nn::LayerNorm("vision.ln_final", config_.embed_dim);
  projection_ = Param("vision.projection", nn::gaussian_matrix(config_.embed_dim, config_.output_dim,
                                                               1.0 / std::sqrt(double(config_.embed_dim)), rng));
}

Matrix ToyVisionEncoder::patchify(const std::vector<ImageTensor>& images, int patch_size) {
  require(!images.empty(), "cannot encode an empty batch");
  const Eigen::Index side = images.front().height();
  require(side > 0 && side == images.front().width(), "images must be square");
  require(side % patch_size == 0, "image side must be divisible by the patch size");
  const Eigen::Index grid = side / patch_size;
  const Eigen::Index tokens = grid * grid;
  const Eigen::Index patch_dim = 3 * patch_size * patch_size;
  Matrix out(static_cast<Eigen::Index>(images.size()) * tokens, patch_dim);
  for (std::size_t b = 0; b < images.size(); ++b) {
    const ImageTensor& img = images[b];
    require(img.height() == side && img.width() == side, "all images in a batch must share one size");
    for (Eigen::Index gy = 0; gy < grid; ++gy) {
      for (Eigen::Index gx = 0; gx < grid; ++gx) {
        auto row = out.row(static_cast<Eigen::Index>(b) * tokens + gy * grid + gx);
        Eigen::Index k = 0;
        for (int py = 0; py < patch_size; ++py) {
          for (int px = 0; px < patch_size; ++px) {
            for (int c = 0; c < 3; ++c) {
              row(k++) = static_cast<double>(img(gy * patch_size + py, gx * patch_size + px, c)) - 0.5;
            }
          }
        }
      }
    }
  }
  return out;
}

Matrix ToyVisionEncoder::encode(const std::vector<ImageTensor>& images) {
  const Matrix patches = patchify(images, config_.patch_size);
  const auto batch = static_cast<Eigen::Index>(images.size());
  tokens_ = patches.rows() / batch;
  const Eigen::Index grid = images.front().height() / config_.patch_size;
  const Matrix pos = config_.position_scale * sinusoidal_positions_2d(grid, config_.embed_dim);

  Matrix h = patches * patch_weight_;
  h.rowwise() += patch_bias_;
  for (Eigen::Index b = 0; b < batch; ++b) {
    h.middleRows(b * tokens_, tokens_) += pos;
  }
  for (auto& block : blocks_) {
    h = block.forward(h, tokens_);
  }
  const Matrix normed = final_norm_.forward(h);
  pooled_.resize(batch, config_.embed_dim);
  for (Eigen::Index b = 0; b < batch; ++b) {
    pooled_.row(b) = normed.middleRows(b * tokens_, tokens_).colwise().mean();
  }
  raw_ = pooled_ * projection_.value;
  normalized_ = nn::l2_normalize_rows(raw_);
  return normalized_;
}

void ToyVisionEncoder::backward(const Matrix& grad_embeddings) {
  if (grad_embeddings.rows() != normalized_.rows() || grad_embeddings.cols() != normalized_.cols()) {
    throw ArgumentError("vision backward: gradient shape does not match the last forward pass");
  }
  const Matrix grad_raw = nn::l2_normalize_rows_backward<double>(normalized_, raw_, grad_embeddings);
  projection_.grad.noalias() += pooled_.transpose() * grad_raw;
  const Matrix grad_pooled = grad_raw * projection_.value.transpose();
  Matrix grad_normed(grad_pooled.rows() * tokens_, grad_pooled.cols());
  const double inv_tokens = 1.0 / static_cast<double>(tokens_);
  for (Eigen::Index b = 0; b < grad_pooled.rows(); ++b) {
    grad_normed.middleRows(b * tokens_, tokens_).rowwise() = grad_pooled.row(b) * inv_tokens;
  }
  Matrix grad = final_norm_.backward(grad_normed);
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
    grad = it->backward(grad);
  }
}

std::vector<Param*> ToyVisionEncoder::parameters(AdaptSet set) {
  std::vector<Param*> out;
  for (auto& block : blocks_) {
    block.collect(out, set);
  }
  if (set != AdaptSet::kLora) {
    nn::collect_norm(final_norm_, out);
  }
  return out;
}

void TextEncoderConfig::validate() const {
  require(vocab_size >= 1, "vocab_size must be positive");
  require(embed_dim >= 4 && embed_dim % 2 == 0, "embed_dim must be even and at least 4");
  require(heads >= 1 && embed_dim % heads == 0, "embed_dim must be divisible by heads");
  require(mlp_ratio >= 1, "mlp_ratio must be positive");
  require(output_dim >= 1, "output_dim must be positive");
  require(lora_rank >= 1 && 2 * lora_rank <= embed_dim, "lora_rank must lie in [1, embed_dim/2]");
}

ToyTextEncoder::ToyTextEncoder(const TextEncoderConfig& config) : config_(config) {
  config_.validate();
  Rng64 rng(config_.seed);
  table_ = nn::gaussian_matrix(config_.vocab_size, config_.embed_dim, 1.0, rng);
  block_ = nn::TransformerBlock("text.block0", config_.embed_dim, config_.heads, config_.mlp_ratio,
                                config_.lora_rank, config_.lora_alpha, rng);
  final_norm_ = nn::LayerNorm("text.ln_final", config_.embed_dim);
  projection_ =
      nn::gaussian_matrix(config_.embed_dim, config_.output_dim, 1.0 / std::sqrt(double(config_.embed_dim)), rng);
}

std::vector<std::string> ToyTextEncoder::tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isalnum(u) != 0 && u < 128) {
      current.push_back(static_cast<char>(std::tolower(u)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) {
    tokens.push_back(std::move(current));
  }
  return tokens;
}

std::size_t ToyTextEncoder::token_id(const std::string& token) const {
  return static_cast<std::size_t>(fnv1a64(token) % static_cast<std::uint64_t>(config_.vocab_size));
}

Matrix ToyTextEncoder::embed_tokens(const std::string& text) const {
  const auto tokens = tokenize(text);
  if (tokens.empty()) {
    throw ArgumentError("text has no tokens: \"" + text + "\"");
  }
  const auto length = static_cast<Eigen::Index>(tokens.size());
  Matrix h = config_.position_scale * sinusoidal_positions_1d(length, config_.embed_dim);
  for (Eigen::Index i = 0; i < length; ++i) {
    h.row(i) += table_.row(static_cast<Eigen::Index>(token_id(tokens[static_cast<std::size_t>(i)])));
  }
  return h;
}

Eigen::RowVectorXd ToyTextEncoder::encode_one(const std::string& text) {
  Matrix h = embed_tokens(text);
  h = final_norm_.forward(block_.forward(h, h.rows()));
  const Matrix raw = h.colwise().mean() * projection_;
  return nn::l2_normalize_rows(raw).row(0);
}

void ToyTextEncoder::backward_one(const std::string& text, const Eigen::RowVectorXd& grad_embedding) {
  if (grad_embedding.size() != config_.output_dim) {
    throw ArgumentError("text backward: gradient has the wrong width");
  }
  Matrix h = embed_tokens(text);
  const Eigen::Index length = h.rows();
  h = final_norm_.forward(block_.forward(h, length));
  const Matrix raw = h.colwise().mean() * projection_;
  const Matrix normalized = nn::l2_normalize_rows(raw);
  const Matrix grad_raw = nn::l2_normalize_rows_backward<double>(normalized, raw, Matrix(grad_embedding));
  const Eigen::RowVectorXd grad_pooled = grad_raw * projection_.transpose() / static_cast<double>(length);
  Matrix grad_h(length, config_.embed_dim);
  grad_h.rowwise() = grad_pooled;
  block_.backward(final_norm_.backward(grad_h));
}

std::vector<Param*> ToyTextEncoder::parameters(AdaptSet set) {
  std::vector<Param*> out;
  block_.collect(out, set);
  if (set != AdaptSet::kLora) {
    nn::collect_norm(final_norm_, out);
  }
  return out;
}

Matrix ToyTextEncoder::encode(const std::vector<std::string>& texts) {
  Matrix out(static_cast<Eigen::Index>(texts.size()), config_.output_dim);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = encode_one(texts[i]);
  }
  return out;
}

} // namespace histobench::latte
