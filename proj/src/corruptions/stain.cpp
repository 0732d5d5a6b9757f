#include "histobench/stain.hpp"

#include <cmath>

namespace histobench::stain {

HedMatrix::HedMatrix() {
  mix_ << 0.65, 0.70, 0.29,  //
      0.07, 0.99, 0.11,      //
      0.27, 0.57, 0.78;
  mix_.rowwise().normalize();
  unmix_ = mix_.inverse();
}

const HedMatrix& HedMatrix::standard() {
  static const HedMatrix matrix;
  return matrix;
}

HedMap rgb2hed(const ImageTensor& image) {
  const auto od = (-image.pixels().cast<double>().array().max(kOdFloor).log()).matrix();
  return {image.height(), image.width(), od * HedMatrix::standard().unmixing()};
}

ImageTensor hed2rgb(const HedMap& hed) {
  const auto od = hed.concentrations * HedMatrix::standard().stain_vectors();
  ImageTensor::PixelMatrix rgb = (-od.array()).exp().min(1.0).max(0.0).cast<float>().matrix();
  return {hed.height, hed.width, std::move(rgb)};
}

ImageTensor rescale_to_unit(const ImageTensor& image) {
  const float lo = image.pixels().minCoeff();
  const float hi = image.pixels().maxCoeff();
  if (!(hi > lo)) {
    return image;
  }
  const float span = hi - lo;
  ImageTensor::PixelMatrix out = ((image.pixels().array() - lo) / span).min(1.0f).max(0.0f).matrix();
  return {image.height(), image.width(), std::move(out)};
}

JitterDraw draw_jitter(double theta, Rng64& rng) {
  if (!(theta >= 0.0)) {
    throw ArgumentError("stain jitter severity must be non-negative");
  }
  JitterDraw draw;
  for (int c = 0; c < 3; ++c) {
    draw.scale[c] = rng.uniform(1.0 - theta, 1.0 + theta);
    draw.shift[c] = rng.uniform(-theta, theta);
  }
  return draw;
}

HedMap apply_jitter(const HedMap& hed, const JitterDraw& draw) {
  HedMap out = hed;
  out.concentrations = (hed.concentrations.array().rowwise() * draw.scale.transpose().array()).rowwise() +
                       draw.shift.transpose().array();
  return out;
}

ImageTensor stain_jitter(const ImageTensor& image, double theta, Rng64& rng) {
  const JitterDraw draw = draw_jitter(theta, rng);
  return rescale_to_unit(hed2rgb(apply_jitter(rgb2hed(image), draw)));
}

} // namespace histobench::stain
