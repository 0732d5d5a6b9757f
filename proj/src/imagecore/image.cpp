#include "histobench/image.hpp"

#include <algorithm>

namespace histobench {

ImageTensor resize_bilinear(const ImageTensor& image, Eigen::Index height, Eigen::Index width) {
  if (height < 1 || width < 1) {
    throw ArgumentError("resize target must be positive");
  }
  if (height == image.height() && width == image.width()) {
    return image;
  }
  ImageTensor out(height, width);
  const double sy = static_cast<double>(image.height()) / static_cast<double>(height);
  const double sx = static_cast<double>(image.width()) / static_cast<double>(width);
  const Eigen::Index ymax = image.height() - 1;
  const Eigen::Index xmax = image.width() - 1;
  for (Eigen::Index y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, static_cast<double>(ymax));
    const auto y0 = static_cast<Eigen::Index>(fy);
    const Eigen::Index y1 = std::min(y0 + 1, ymax);
    const double wy = fy - static_cast<double>(y0);
    for (Eigen::Index x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, static_cast<double>(xmax));
      const auto x0 = static_cast<Eigen::Index>(fx);
      const Eigen::Index x1 = std::min(x0 + 1, xmax);
      const double wx = fx - static_cast<double>(x0);
      for (int c = 0; c < 3; ++c) {
        const double top = (1.0 - wx) * image(y0, x0, c) + wx * image(y0, x1, c);
        const double bottom = (1.0 - wx) * image(y1, x0, c) + wx * image(y1, x1, c);
        out(y, x, c) = static_cast<float>((1.0 - wy) * top + wy * bottom);
      }
    }
  }
  return out;
}

} // namespace histobench
