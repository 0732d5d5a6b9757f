#include "histobench/corruption.hpp"

#include <array>
#include <cmath>
#include <utility>

#include "histobench/contamination.hpp"
#include "histobench/errors.hpp"
#include "histobench/image_io.hpp"
#include "histobench/optics.hpp"
#include "histobench/photometric.hpp"
#include "histobench/stain.hpp"

namespace histobench {

namespace {

constexpr std::array<std::pair<CorruptionKind, std::string_view>, 11> kNames{{
    {CorruptionKind::kNone, "none"},
    {CorruptionKind::kStainLight, "stain-light"},
    {CorruptionKind::kStainHeavy, "stain-heavy"},
    {CorruptionKind::kDust, "dust"},
    {CorruptionKind::kAirBubble, "air-bubble"},
    {CorruptionKind::kDefocusBlur, "defocus-blur"},
    {CorruptionKind::kMotionBlur, "motion-blur"},
    {CorruptionKind::kGaussianNoise, "gaussian-noise"},
    {CorruptionKind::kShotNoise, "shot-noise"},
    {CorruptionKind::kBrightness, "brightness"},
    {CorruptionKind::kContrast, "contrast"},
}};

std::string where(const CorruptionStage& stage, const std::string& key) {
  return std::string(kind_name(stage.kind)) + "." + key;
}

long as_integer(const CorruptionStage& stage, const std::string& key) {
  const double v = stage.params.at(key);
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    throw ArgumentError(where(stage, key) + " must be an integer");
  }
  return static_cast<long>(v);
}

contamination::DustParams dust_params(const CorruptionStage& s) {
  contamination::DustParams p;
  p.count_min = as_integer(s, "count_min");
  p.count_max = as_integer(s, "count_max");
  p.smudge_min = s.params.at("smudge_min");
  p.smudge_max = s.params.at("smudge_max");
  p.line_width_min = as_integer(s, "line_width_min");
  p.line_width_max = as_integer(s, "line_width_max");
  p.line_length_min = s.params.at("line_length_min");
  p.line_length_max = s.params.at("line_length_max");
  p.max_opacity = s.params.at("max_opacity");
  p.mask_blur_sigma = s.params.at("blur_sigma");
  return p;
}

contamination::BubbleParams bubble_params(const CorruptionStage& s) {
  contamination::BubbleParams p;
  p.count_min = as_integer(s, "count_min");
  p.count_max = as_integer(s, "count_max");
  p.radius_min = s.params.at("radius_min");
  p.radius_max = s.params.at("radius_max");
  p.blur_radius = static_cast<int>(as_integer(s, "blur_radius"));
  p.blur_alias = s.params.at("blur_alias");
  p.rim_width = s.params.at("rim_width");
  p.rim_alpha = s.params.at("rim_alpha");
  p.highlight_offset = s.params.at("highlight_offset");
  p.highlight_axis_x = s.params.at("highlight_axis_x");
  p.highlight_axis_y = s.params.at("highlight_axis_y");
  p.highlight_alpha = s.params.at("highlight_alpha");
  p.highlight_sigma = s.params.at("highlight_sigma");
  return p;
}

void require(bool ok, const CorruptionStage& stage, const std::string& key, const char* rule) {
  if (!ok) {
    throw ArgumentError(where(stage, key) + " " + rule);
  }
}

void validate_stage(const CorruptionStage& s) {
  const ParamMap defaults = default_params(s.kind);
  for (const auto& [key, value] : s.params) {
    if (!defaults.contains(key)) {
      throw ArgumentError("unknown parameter " + where(s, key));
    }
    if (!std::isfinite(value)) {
      throw ArgumentError(where(s, key) + " must be finite");
    }
  }
  for (const auto& [key, value] : defaults) {
    if (!s.params.contains(key)) {
      throw ArgumentError("missing parameter " + where(s, key));
    }
  }
  switch (s.kind) {
    case CorruptionKind::kNone:
      break;
    case CorruptionKind::kStainLight:
    case CorruptionKind::kStainHeavy:
      require(s.params.at("theta") >= 0.0 && s.params.at("theta") < 1.0, s, "theta", "must lie in [0, 1)");
      break;
    case CorruptionKind::kDust:
      dust_params(s).validate();
      break;
    case CorruptionKind::kAirBubble:
      bubble_params(s).validate();
      break;
    case CorruptionKind::kDefocusBlur:
      require(as_integer(s, "radius") >= 1, s, "radius", "must be at least 1");
      require(s.params.at("alias") >= 0.0, s, "alias", "must be non-negative");
      break;
    case CorruptionKind::kMotionBlur:
      require(as_integer(s, "length") >= 1, s, "length", "must be at least 1");
      require(s.params.at("sigma") > 0.0, s, "sigma", "must be positive");
      break;
    case CorruptionKind::kGaussianNoise:
      require(s.params.at("sigma") >= 0.0, s, "sigma", "must be non-negative");
      break;
    case CorruptionKind::kShotNoise:
      require(s.params.at("c") > 0.0, s, "c", "must be positive");
      break;
    case CorruptionKind::kBrightness:
      break;
    case CorruptionKind::kContrast:
      require(s.params.at("factor") > 0.0, s, "factor", "must be positive");
      break;
  }
}

} // namespace

std::string_view kind_name(CorruptionKind kind) {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "none";
}

CorruptionKind parse_kind(std::string_view name) {
  for (const auto& [k, n] : kNames) {
    if (n == name) return k;
  }
  throw ArgumentError("unknown corruption kind \"" + std::string(name) + "\"");
}

const std::vector<CorruptionKind>& all_corruption_kinds() {
  static const std::vector<CorruptionKind> kinds{
      CorruptionKind::kStainLight,  CorruptionKind::kStainHeavy,    CorruptionKind::kDust,
      CorruptionKind::kAirBubble,   CorruptionKind::kDefocusBlur,   CorruptionKind::kMotionBlur,
      CorruptionKind::kGaussianNoise, CorruptionKind::kShotNoise,   CorruptionKind::kBrightness,
      CorruptionKind::kContrast,
  };
  return kinds;
}

ParamMap default_params(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::kNone:
      return {};
    case CorruptionKind::kStainLight:
      return {{"theta", stain::kStainLightTheta}};
    case CorruptionKind::kStainHeavy:
      return {{"theta", stain::kStainHeavyTheta}};
    case CorruptionKind::kDust: {
      const contamination::DustParams p;
      return {{"count_min", double(p.count_min)},
              {"count_max", double(p.count_max)},
              {"smudge_min", p.smudge_min},
              {"smudge_max", p.smudge_max},
              {"line_width_min", double(p.line_width_min)},
              {"line_width_max", double(p.line_width_max)},
              {"line_length_min", p.line_length_min},
              {"line_length_max", p.line_length_max},
              {"max_opacity", p.max_opacity},
              {"blur_sigma", p.mask_blur_sigma}};
    }
    case CorruptionKind::kAirBubble: {
      const contamination::BubbleParams p;
      return {{"count_min", double(p.count_min)},   {"count_max", double(p.count_max)},
              {"radius_min", p.radius_min},         {"radius_max", p.radius_max},
              {"blur_radius", double(p.blur_radius)}, {"blur_alias", p.blur_alias},
              {"rim_width", p.rim_width},           {"rim_alpha", p.rim_alpha},
              {"highlight_offset", p.highlight_offset}, {"highlight_axis_x", p.highlight_axis_x},
              {"highlight_axis_y", p.highlight_axis_y}, {"highlight_alpha", p.highlight_alpha},
              {"highlight_sigma", p.highlight_sigma}};
    }
    case CorruptionKind::kDefocusBlur:
      return {{"radius", double(optics::kDefocusRadius)}, {"alias", optics::kDefocusAlias}};
    case CorruptionKind::kMotionBlur:
      return {{"length", double(optics::kMotionLength)}, {"sigma", optics::kMotionSigma}};
    case CorruptionKind::kGaussianNoise:
      return {{"sigma", photometric::PhotometricParams{}.gauss_sigma}};
    case CorruptionKind::kShotNoise:
      return {{"c", photometric::PhotometricParams{}.shot_c}};
    case CorruptionKind::kBrightness:
      return {{"delta", photometric::PhotometricParams{}.brightness_delta}};
    case CorruptionKind::kContrast:
      return {{"factor", photometric::PhotometricParams{}.contrast_f}};
  }
  return {};
}

CorruptionSpec CorruptionSpec::parse(std::string_view text, std::uint64_t global_seed, const ParamMap& overrides) {
  CorruptionSpec spec;
  spec.global_seed = global_seed;
  std::size_t start = 0;
  while (true) {
    const std::size_t plus = text.find('+', start);
    const std::string_view part = text.substr(start, plus == std::string_view::npos ? plus : plus - start);
    if (part.empty()) {
      throw ArgumentError("empty corruption stage in \"" + std::string(text) + "\"");
    }
    const CorruptionKind kind = parse_kind(part);
    spec.stages.push_back({kind, default_params(kind)});
    if (plus == std::string_view::npos) break;
    start = plus + 1;
  }
  for (const auto& [key, value] : overrides) {
    const std::size_t dot = key.find('.');
    std::vector<CorruptionStage*> targets;
    std::string param = key;
    if (dot != std::string::npos) {
      const CorruptionKind kind = parse_kind(key.substr(0, dot));
      param = key.substr(dot + 1);
      for (auto& stage : spec.stages) {
        if (stage.kind == kind) targets.push_back(&stage);
      }
    } else {
      for (auto& stage : spec.stages) {
        if (stage.params.contains(key)) targets.push_back(&stage);
      }
    }
    if (targets.empty()) {
      throw ArgumentError("parameter \"" + key + "\" does not apply to " + spec.name());
    }
    if (targets.size() > 1 && dot == std::string::npos) {
      throw ArgumentError("parameter \"" + key + "\" is ambiguous in " + spec.name() + "; use kind." + key);
    }
    for (CorruptionStage* stage : targets) {
      if (!stage->params.contains(param)) {
        throw ArgumentError("unknown parameter " + where(*stage, param));
      }
      stage->params[param] = value;
    }
  }
  spec.validate();
  return spec;
}

std::string CorruptionSpec::name() const {
  std::string out;
  for (const auto& stage : stages) {
    if (!out.empty()) out += '+';
    out += kind_name(stage.kind);
  }
  return out;
}

void CorruptionSpec::validate() const {
  if (stages.empty()) {
    throw ArgumentError("corruption spec has no stages");
  }
  for (const auto& stage : stages) {
    validate_stage(stage);
  }
}

ImageTensor apply_stage(const ImageTensor& image, const CorruptionStage& stage, Rng64& rng) {
  const ParamMap& p = stage.params;
  switch (stage.kind) {
    case CorruptionKind::kNone:
      return image;
    case CorruptionKind::kStainLight:
    case CorruptionKind::kStainHeavy:
      return stain::stain_jitter(image, p.at("theta"), rng);
    case CorruptionKind::kDust: {
      const auto mask = contamination::synth_dust_mask(image.height(), image.width(), dust_params(stage), rng);
      return contamination::apply_dust(image, mask);
    }
    case CorruptionKind::kAirBubble:
      return contamination::apply_air_bubble(image, bubble_params(stage), rng);
    case CorruptionKind::kDefocusBlur:
      return optics::defocus_blur(image, static_cast<int>(as_integer(stage, "radius")), p.at("alias"));
    case CorruptionKind::kMotionBlur:
      return optics::motion_blur(image, static_cast<int>(as_integer(stage, "length")), p.at("sigma"), rng);
    case CorruptionKind::kGaussianNoise:
      return photometric::gaussian_noise(image, p.at("sigma"), rng);
    case CorruptionKind::kShotNoise:
      return photometric::shot_noise(image, p.at("c"), rng);
    case CorruptionKind::kBrightness:
      return photometric::brightness(image, p.at("delta"));
    case CorruptionKind::kContrast:
      return photometric::contrast(image, p.at("factor"));
  }
  return image;
}

ImageTensor apply_corruption(const ImageTensor& image, const CorruptionSpec& spec, std::string_view image_id) {
  Rng64 rng(derive_image_seed(spec.global_seed, image_id));
  ImageTensor out = image;
  for (const auto& stage : spec.stages) {
    out = apply_stage(out, stage, rng);
  }
  return out;
}

std::vector<std::uint8_t> corrupt_bytes(const std::vector<std::uint8_t>& pixels, Eigen::Index height,
                                        Eigen::Index width, const CorruptionSpec& spec, std::string_view image_id) {
  return to_bytes(apply_corruption(from_bytes(pixels, height, width), spec, image_id));
}

std::pair<std::string, double> parse_param_assignment(std::string_view text) {
  const std::size_t eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0 || eq + 1 == text.size()) {
    throw ArgumentError("expected key=value, got \"" + std::string(text) + "\"");
  }
  const std::string key(text.substr(0, eq));
  const std::string value(text.substr(eq + 1));
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size()) {
    throw ArgumentError("parameter " + key + " needs a numeric value, got \"" + value + "\"");
  }
  return {key, v};
}

} // namespace histobench
