#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "histobench/image.hpp"
#include "histobench/rng.hpp"

namespace histobench {

enum class CorruptionKind {
  kNone,
  kStainLight,
  kStainHeavy,
  kDust,
  kAirBubble,
  kDefocusBlur,
  kMotionBlur,
  kGaussianNoise,
  kShotNoise,
  kBrightness,
  kContrast,
};

std::string_view kind_name(CorruptionKind kind);
CorruptionKind parse_kind(std::string_view name);
/// The ten corruption kinds, excluding `none`, in canonical order.
const std::vector<CorruptionKind>& all_corruption_kinds();
/// Parameter names accepted by a kind, with their default values.
std::map<std::string, double> default_params(CorruptionKind kind);

using ParamMap = std::map<std::string, double>;

struct CorruptionStage {
  CorruptionKind kind = CorruptionKind::kNone;
  ParamMap params;  // complete: defaults merged with overrides

  bool operator==(const CorruptionStage&) const = default;
};

/// One or more stages applied in order with a single per-image generator.
struct CorruptionSpec {
  std::vector<CorruptionStage> stages;
  std::uint64_t global_seed = 0;

  /// "stain-heavy+gaussian-noise". Overrides are "key" (must match exactly one
  /// stage) or "kind.key".
  static CorruptionSpec parse(std::string_view text, std::uint64_t global_seed, const ParamMap& overrides = {});

  std::string name() const;
  /// Throws ArgumentError naming the first out-of-range parameter.
  void validate() const;
  bool operator==(const CorruptionSpec&) const = default;
};

ImageTensor apply_stage(const ImageTensor& image, const CorruptionStage& stage, Rng64& rng);

/// Corrupt one image with the generator seeded from (global_seed, image_id).
ImageTensor apply_corruption(const ImageTensor& image, const CorruptionSpec& spec, std::string_view image_id);

/// 8-bit RGB buffer in, 8-bit RGB buffer out; matches the `corrupt` CLI on the
/// same pixels, spec and id.
std::vector<std::uint8_t> corrupt_bytes(const std::vector<std::uint8_t>& pixels, Eigen::Index height,
                                        Eigen::Index width, const CorruptionSpec& spec, std::string_view image_id);

/// Parses "k=v" into a ParamMap entry.
std::pair<std::string, double> parse_param_assignment(std::string_view text);

} // namespace histobench
