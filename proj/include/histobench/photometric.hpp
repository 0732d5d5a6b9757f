#pragma once

#include "histobench/image.hpp"
#include "histobench/rng.hpp"

namespace histobench::photometric {

struct PhotometricParams {
  double gauss_sigma = 0.38;
  double shot_c = 3.0;
  double contrast_f = 0.05;
  double brightness_delta = 0.5;
};

/// clip(x + σ·n); one standard normal per element, row-major, channel innermost.
ImageTensor gaussian_noise(const ImageTensor& image, double sigma, Rng64& rng);

/// clip(Poisson(x·c)/c); same traversal order as gaussian_noise.
ImageTensor shot_noise(const ImageTensor& image, double c, Rng64& rng);

/// clip((x − μ)·f + μ) with μ the mean over every element.
ImageTensor contrast(const ImageTensor& image, double f);

ImageTensor brightness(const ImageTensor& image, double delta);

} // namespace histobench::photometric
