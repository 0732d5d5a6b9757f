#include "histobench/contamination.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "histobench/optics.hpp"

namespace histobench::contamination {
namespace {

void union_opacity(OcclusionMask& mask, Eigen::Index y, Eigen::Index x, double alpha) {
  mask(y, x) = 1.0 - (1.0 - mask(y, x)) * (1.0 - alpha);
}

void stamp_rectangle(OcclusionMask& mask, const DustParams& p, Rng64& rng) {
  const Eigen::Index h = mask.rows();
  const Eigen::Index w = mask.cols();
  const double rect_w = rng.uniform(p.smudge_min, p.smudge_max) * static_cast<double>(w);
  const double rect_h = rng.uniform(p.smudge_min, p.smudge_max) * static_cast<double>(h);
  const double x0 = rng.uniform(0.0, static_cast<double>(w) - rect_w);
  const double y0 = rng.uniform(0.0, static_cast<double>(h) - rect_h);

  const auto xs = static_cast<Eigen::Index>(std::floor(x0));
  const auto ys = static_cast<Eigen::Index>(std::floor(y0));
  const Eigen::Index xe = std::min(w, xs + std::max<Eigen::Index>(1, std::lround(rect_w)));
  const Eigen::Index ye = std::min(h, ys + std::max<Eigen::Index>(1, std::lround(rect_h)));
  const double rows = static_cast<double>(std::max<Eigen::Index>(ye - ys - 1, 1));
  for (Eigen::Index y = ys; y < ye; ++y) {
    const double ramp = static_cast<double>(y - ys) / rows;  // 0 at the top edge, 1 at the bottom
    const double alpha = p.max_opacity * (1.0 - 0.8 * ramp);
    for (Eigen::Index x = xs; x < xe; ++x) {
      union_opacity(mask, y, x, alpha);
    }
  }
}

void stamp_line(OcclusionMask& mask, const DustParams& p, Rng64& rng) {
  const Eigen::Index h = mask.rows();
  const Eigen::Index w = mask.cols();
  const double cx = rng.uniform(0.0, static_cast<double>(w - 1));
  const double cy = rng.uniform(0.0, static_cast<double>(h - 1));
  const double angle = rng.uniform(0.0, std::numbers::pi);
  const double length = rng.uniform(p.line_length_min, p.line_length_max) * static_cast<double>(std::min(h, w));
  const auto width = static_cast<double>(rng.uniform_int(p.line_width_min, p.line_width_max));

  const double ux = std::cos(angle);
  const double uy = std::sin(angle);
  const double half_len = 0.5 * length;
  const double half_width = 0.5 * width;
  const double reach = half_len + half_width + 1.0;
  const auto y_lo = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(cy - reach)));
  const auto y_hi = std::min<Eigen::Index>(h - 1, static_cast<Eigen::Index>(std::ceil(cy + reach)));
  const auto x_lo = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(cx - reach)));
  const auto x_hi = std::min<Eigen::Index>(w - 1, static_cast<Eigen::Index>(std::ceil(cx + reach)));
  for (Eigen::Index y = y_lo; y <= y_hi; ++y) {
    for (Eigen::Index x = x_lo; x <= x_hi; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      const double along = std::clamp(dx * ux + dy * uy, -half_len, half_len);
      const double ex = dx - along * ux;
      const double ey = dy - along * uy;
      if (ex * ex + ey * ey <= half_width * half_width) {
        union_opacity(mask, y, x, p.max_opacity);
      }
    }
  }
}

void blend_toward_white(ImageTensor& image, Eigen::Index y, Eigen::Index x, double alpha) {
  for (int c = 0; c < 3; ++c) {
    const double v = image(y, x, c);
    image(y, x, c) = static_cast<float>((1.0 - alpha) * v + alpha);
  }
}

} // namespace

void DustParams::validate() const {
  if (count_min < 0 || count_min > count_max) {
    throw ArgumentError("dust: invalid artifact count range");
  }
  if (!(smudge_min > 0.0 && smudge_min <= smudge_max && smudge_max <= 1.0)) {
    throw ArgumentError("dust: invalid smudge size range");
  }
  if (line_width_min < 1 || line_width_min > line_width_max) {
    throw ArgumentError("dust: invalid line width range");
  }
  if (!(line_length_min > 0.0 && line_length_min <= line_length_max)) {
    throw ArgumentError("dust: invalid line length range");
  }
  if (!(max_opacity > 0.0 && max_opacity <= 1.0)) {
    throw ArgumentError("dust: max_opacity must lie in (0, 1]");
  }
  if (!(mask_blur_sigma >= 0.0)) {
    throw ArgumentError("dust: mask blur sigma must be non-negative");
  }
}

OcclusionMask synth_dust_mask(Eigen::Index height, Eigen::Index width, const DustParams& params, Rng64& rng) {
  if (height < 16 || width < 16) {
    throw ArgumentError("dust: image must be at least 16x16");
  }
  params.validate();
  OcclusionMask mask = OcclusionMask::Zero(height, width);
  const long count = rng.uniform_int(params.count_min, params.count_max);
  for (long i = 0; i < count; ++i) {
    if (rng.next_unit() < 0.5) {
      stamp_rectangle(mask, params, rng);
    } else {
      stamp_line(mask, params, rng);
    }
  }
  return optics::gaussian_blur_plane(mask, params.mask_blur_sigma).max(0.0).min(1.0);
}

ImageTensor apply_dust(const ImageTensor& image, const OcclusionMask& mask) {
  if (mask.rows() != image.height() || mask.cols() != image.width()) {
    throw ArgumentError("dust: mask dimensions do not match the image");
  }
  ImageTensor out = image;
  const Eigen::Map<const Eigen::ArrayXd> keep_flat(mask.data(), mask.size());
  const Eigen::ArrayXf keep = (1.0 - keep_flat).cast<float>();
  out.pixels().array().colwise() *= keep;
  return out;
}

void BubbleParams::validate() const {
  if (count_min < 0 || count_min > count_max) {
    throw ArgumentError("air-bubble: invalid bubble count range");
  }
  if (!(radius_min > 0.0 && radius_min <= radius_max && radius_max < 0.5)) {
    throw ArgumentError("air-bubble: degenerate radius range (need 0 < min <= max < 0.5)");
  }
  if (blur_radius < 0 || !(blur_alias >= 0.0)) {
    throw ArgumentError("air-bubble: invalid blur severity");
  }
  const auto in_unit = [](double a) { return a >= 0.0 && a <= 1.0; };
  if (!in_unit(rim_alpha) || !in_unit(highlight_alpha) || !(rim_width >= 0.0) || !(highlight_sigma >= 0.0)) {
    throw ArgumentError("air-bubble: rim/highlight parameters out of range");
  }
}

std::vector<BubbleRegion> draw_bubbles(Eigen::Index height, Eigen::Index width, const BubbleParams& params,
                                       Rng64& rng) {
  params.validate();
  const auto side = static_cast<double>(std::min(height, width));
  const long count = rng.uniform_int(params.count_min, params.count_max);
  std::vector<BubbleRegion> bubbles;
  bubbles.reserve(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) {
    BubbleRegion b;
    b.centre_y = rng.uniform(0.0, static_cast<double>(height));
    b.centre_x = rng.uniform(0.0, static_cast<double>(width));
    b.radius = rng.uniform(params.radius_min, params.radius_max) * side;
    bubbles.push_back(b);
  }
  return bubbles;
}

ImageTensor composite_bubble(const ImageTensor& image, const BubbleRegion& bubble, const BubbleParams& params) {
  ImageTensor out = image;
  const Eigen::Index h = image.height();
  const Eigen::Index w = image.width();
  const double r = bubble.radius;
  const auto y_lo = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(bubble.centre_y - r)));
  const auto y_hi = std::min<Eigen::Index>(h - 1, static_cast<Eigen::Index>(std::ceil(bubble.centre_y + r)));
  const auto x_lo = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(bubble.centre_x - r)));
  const auto x_hi = std::min<Eigen::Index>(w - 1, static_cast<Eigen::Index>(std::ceil(bubble.centre_x + r)));

  // (i) defocus inside B.
  if (params.blur_radius >= 1) {
    const ImageTensor blurred = optics::defocus_blur(image, params.blur_radius, params.blur_alias);
    for (Eigen::Index y = y_lo; y <= y_hi; ++y) {
      for (Eigen::Index x = x_lo; x <= x_hi; ++x) {
        if (bubble.contains(y, x)) {
          for (int c = 0; c < 3; ++c) {
            out(y, x, c) = blurred(y, x, c);
          }
        }
      }
    }
  }

  // (ii) translucent rim along the inner edge of the disk.
  if (params.rim_alpha > 0.0) {
    const double inner = r - params.rim_width * r;
    for (Eigen::Index y = y_lo; y <= y_hi; ++y) {
      for (Eigen::Index x = x_lo; x <= x_hi; ++x) {
        const double d = std::hypot(static_cast<double>(y) - bubble.centre_y, static_cast<double>(x) - bubble.centre_x);
        if (bubble.contains(y, x) && d > inner) {
          blend_toward_white(out, y, x, params.rim_alpha);
        }
      }
    }
  }

  // (iii) blurred specular ellipse offset toward the upper-left.
  if (params.highlight_alpha > 0.0) {
    const double shift = params.highlight_offset * r / std::numbers::sqrt2;
    const double ey = bubble.centre_y - shift;
    const double ex = bubble.centre_x - shift;
    const double ax = std::max(params.highlight_axis_x * r, 1e-9);
    const double ay = std::max(params.highlight_axis_y * r, 1e-9);
    Plane<double> glow = Plane<double>::Zero(h, w);
    for (Eigen::Index y = y_lo; y <= y_hi; ++y) {
      for (Eigen::Index x = x_lo; x <= x_hi; ++x) {
        const double ny = (static_cast<double>(y) - ey) / ay;
        const double nx = (static_cast<double>(x) - ex) / ax;
        if (nx * nx + ny * ny <= 1.0) {
          glow(y, x) = params.highlight_alpha;
        }
      }
    }
    glow = optics::gaussian_blur_plane(glow, params.highlight_sigma);
    for (Eigen::Index y = y_lo; y <= y_hi; ++y) {
      for (Eigen::Index x = x_lo; x <= x_hi; ++x) {
        if (bubble.contains(y, x) && glow(y, x) > 0.0) {
          blend_toward_white(out, y, x, std::min(glow(y, x), 1.0));
        }
      }
    }
  }
  return out;
}

ImageTensor apply_air_bubble(const ImageTensor& image, const BubbleParams& params, Rng64& rng) {
  const std::vector<BubbleRegion> bubbles = draw_bubbles(image.height(), image.width(), params, rng);
  ImageTensor out = image;
  for (const BubbleRegion& b : bubbles) {
    out = composite_bubble(out, b, params);
  }
  return out;
}

} // namespace histobench::contamination
