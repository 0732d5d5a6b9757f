#pragma once

#include <Eigen/Dense>

#include "histobench/image.hpp"
#include "histobench/rng.hpp"

namespace histobench::stain {

using Matrix3 = Eigen::Matrix3d;

/// Per-pixel stain concentrations, one row per pixel, columns H, E, D.
struct HedMap {
  Eigen::Index height = 0;
  Eigen::Index width = 0;
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> concentrations;
};

/// Ruifrok–Johnston stain absorption vectors (rows: Hematoxylin, Eosin, DAB),
/// each normalised to unit length, together with the unmixing inverse.
class HedMatrix {
public:
  static const HedMatrix& standard();

  const Matrix3& stain_vectors() const { return mix_; }
  const Matrix3& unmixing() const { return unmix_; }

private:
  HedMatrix();
  Matrix3 mix_;
  Matrix3 unmix_;
};

inline constexpr double kOdFloor = 1e-6;

/// od = -ln(max(v, 1e-6)); s = od · M⁻¹ (row vectors).
HedMap rgb2hed(const ImageTensor& image);

/// v = exp(-(s · M)), clipped to [0,1].
ImageTensor hed2rgb(const HedMap& hed);

/// Global min–max stretch onto [0,1]; constant images are returned unchanged.
ImageTensor rescale_to_unit(const ImageTensor& image);

struct JitterDraw {
  Eigen::Vector3d scale;  // α_c
  Eigen::Vector3d shift;  // β_c
};

/// Draws α_c ∼ U(1−θ, 1+θ) then β_c ∼ U(−θ, θ) for c = H, E, D in that order.
JitterDraw draw_jitter(double theta, Rng64& rng);

/// s'_c = α_c·s_c + β_c applied in concentration space.
HedMap apply_jitter(const HedMap& hed, const JitterDraw& draw);

/// HED stain jitter followed by hed2rgb and a min–max rescale.
ImageTensor stain_jitter(const ImageTensor& image, double theta, Rng64& rng);

inline constexpr double kStainLightTheta = 0.05;
inline constexpr double kStainHeavyTheta = 0.2;

} // namespace histobench::stain
