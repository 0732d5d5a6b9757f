#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "histobench/image.hpp"
#include "histobench/nn/layers.hpp"

namespace histobench::latte {

using nn::AdaptSet;
using nn::Matrix;
using nn::Param;

struct VisionEncoderConfig {
  int patch_size = 8;
  int embed_dim = 32;
  int depth = 2;
  int heads = 4;
  int mlp_ratio = 2;
  int output_dim = 16;
  int lora_rank = 2;
  double lora_alpha = 1.0;
  double position_scale = 1.0;
  std::uint64_t seed = 3;

  void validate() const;
  bool operator==(const VisionEncoderConfig&) const = default;
};

/// Patchify → frozen linear embed (+ sinusoidal positions) → pre-norm blocks →
/// final LN → mean pool → projection → L2 normalise. Square images of any side
/// divisible by the patch size are accepted.
class ToyVisionEncoder {
public:
  explicit ToyVisionEncoder(const VisionEncoderConfig& config = {});

  /// Forward pass; caches activations for a following backward().
  Matrix encode(const std::vector<ImageTensor>& images);
  /// Accumulates parameter gradients from dL/d(normalised embeddings).
  void backward(const Matrix& grad_embeddings);

  /// LoRA pairs of every Q/K/V/output/MLP projection and/or all LN affines.
  std::vector<Param*> parameters(AdaptSet set);
  Param& projection() { return projection_; }
  const VisionEncoderConfig& config() const { return config_; }

  /// Rows of (py, px, c) patch vectors, centred on 0.5; grid cells row-major.
  static Matrix patchify(const std::vector<ImageTensor>& images, int patch_size);

private:
  VisionEncoderConfig config_;
  Matrix patch_weight_;
  Eigen::RowVectorXd patch_bias_;
  std::vector<nn::TransformerBlock> blocks_;
  nn::LayerNorm final_norm_;
  Param projection_;

  Eigen::Index tokens_ = 0;
  Matrix pooled_;
  Matrix raw_;
  Matrix normalized_;
};

struct TextEncoderConfig {
  int vocab_size = 4096;
  int embed_dim = 32;
  int heads = 4;
  int mlp_ratio = 2;
  int output_dim = 16;
  double position_scale = 0.1;
  int lora_rank = 2;
  double lora_alpha = 1.0;
  std::uint64_t seed = 11;

  void validate() const;
  bool operator==(const TextEncoderConfig&) const = default;
};

/// Hashed-vocabulary text tower: one pre-norm block, mean pool, projection,
/// L2 normalise. The projection is always frozen; the block and final LN
/// expose the same adaptable families as the vision side.
class ToyTextEncoder {
public:
  explicit ToyTextEncoder(const TextEncoderConfig& config = {});

  Matrix encode(const std::vector<std::string>& texts);
  Eigen::RowVectorXd encode_one(const std::string& text);
  /// Re-runs the forward pass for `text` and accumulates parameter gradients
  /// from dL/d(normalised embedding).
  void backward_one(const std::string& text, const Eigen::RowVectorXd& grad_embedding);
  std::vector<Param*> parameters(AdaptSet set);

  /// Lower-cased maximal runs of ASCII alphanumerics.
  static std::vector<std::string> tokenize(const std::string& text);
  std::size_t token_id(const std::string& token) const;

  const TextEncoderConfig& config() const { return config_; }

private:
  Matrix embed_tokens(const std::string& text) const;

  TextEncoderConfig config_;
  Matrix table_;
  nn::TransformerBlock block_;
  nn::LayerNorm final_norm_;
  Matrix projection_;
};

/// Sinusoidal 2-D position code: the first half of the features encode the
/// row index, the second half the column index.
Matrix sinusoidal_positions_2d(Eigen::Index grid, Eigen::Index dim);
Matrix sinusoidal_positions_1d(Eigen::Index length, Eigen::Index dim);

} // namespace histobench::latte
