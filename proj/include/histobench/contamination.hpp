#pragma once

#include "histobench/image.hpp"
#include "histobench/rng.hpp"

namespace histobench::contamination {

/// Per-pixel opacity in [0,1]; 0 leaves the pixel untouched, 1 occludes it.
using OcclusionMask = Plane<double>;

struct DustParams {
  long count_min = 3;
  long count_max = 8;
  double smudge_min = 0.08;  // fraction of the image side
  double smudge_max = 0.30;
  long line_width_min = 1;   // pixels
  long line_width_max = 2;
  double line_length_min = 0.3;  // fraction of the shorter side
  double line_length_max = 0.9;
  double max_opacity = 0.6;
  double mask_blur_sigma = 3.0;

  void validate() const;
};

/// Random rectangular smudges (opacity ramping from max_opacity at the top to
/// 0.2·max_opacity at the bottom) and thin constant-opacity lines, unioned,
/// Gaussian-blurred and clipped.
OcclusionMask synth_dust_mask(Eigen::Index height, Eigen::Index width, const DustParams& params, Rng64& rng);

/// x' = x ⊙ (1 − M), broadcast over channels.
ImageTensor apply_dust(const ImageTensor& image, const OcclusionMask& mask);

struct BubbleParams {
  long count_min = 1;
  long count_max = 3;
  double radius_min = 0.10;  // fraction of min(H, W)
  double radius_max = 0.25;
  int blur_radius = 5;       // interior defocus severity; 0 disables the blur
  double blur_alias = 0.5;
  double rim_width = 0.08;   // fraction of the bubble radius
  double rim_alpha = 0.35;
  double highlight_offset = 0.4;  // along the upper-left diagonal, fraction of radius
  double highlight_axis_x = 0.3;
  double highlight_axis_y = 0.15;
  double highlight_alpha = 0.5;
  double highlight_sigma = 2.0;

  void validate() const;
};

/// A disk-shaped bubble; `contains` is the binary mask B.
struct BubbleRegion {
  double centre_y = 0.0;
  double centre_x = 0.0;
  double radius = 0.0;

  bool contains(Eigen::Index y, Eigen::Index x) const {
    const double dy = static_cast<double>(y) - centre_y;
    const double dx = static_cast<double>(x) - centre_x;
    return dy * dy + dx * dx <= radius * radius;
  }
};

/// Draws the bubble count, then (cy, cx, radius) per bubble.
std::vector<BubbleRegion> draw_bubbles(Eigen::Index height, Eigen::Index width, const BubbleParams& params,
                                       Rng64& rng);

/// Composites one bubble: interior defocus (x' = (1−B)x + B·Blur(x)), a
/// translucent rim, and a blurred specular highlight, all confined to B.
ImageTensor composite_bubble(const ImageTensor& image, const BubbleRegion& bubble, const BubbleParams& params);

ImageTensor apply_air_bubble(const ImageTensor& image, const BubbleParams& params, Rng64& rng);

} // namespace histobench::contamination
