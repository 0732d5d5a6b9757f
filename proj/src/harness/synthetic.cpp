#include "histobench/synthetic.hpp"

#include <array>
#include <cmath>
#include <cstdio>

#include "histobench/errors.hpp"

namespace histobench::synthetic {

namespace {

using Colour = std::array<double, 3>;

Colour palette_colour(const Colour& base, double jitter, Rng64& rng) {
  Colour out{};
  for (std::size_t c = 0; c < 3; ++c) {
    out[c] = std::clamp(base[c] + rng.uniform(-jitter, jitter), 0.0, 1.0);
  }
  return out;
}

void check_size(int size) {
  if (size < 8) {
    throw ArgumentError("synthetic textures need a side of at least 8");
  }
}

} // namespace

ImageTensor checker_texture(int size, Rng64& rng, const TextureParams& params) {
  check_size(size);
  const Colour a = palette_colour(params.dark, params.colour_jitter, rng);
  const Colour b = palette_colour(params.light, params.colour_jitter, rng);
  const long period = rng.uniform_int(params.period_min, params.period_max);
  const long phase_y = params.random_phase ? rng.uniform_int(0, period - 1) : 0;
  const long phase_x = params.random_phase ? rng.uniform_int(0, period - 1) : 0;
  ImageTensor img(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const bool on = (((y + phase_y) / period) + ((x + phase_x) / period)) % 2 == 0;
      const Colour& col = on ? a : b;
      for (int c = 0; c < 3; ++c) {
        img(y, x, c) = static_cast<float>(col[static_cast<std::size_t>(c)]);
      }
    }
  }
  return img;
}

ImageTensor blob_texture(int size, Rng64& rng, const TextureParams& params) {
  check_size(size);
  const Colour a = palette_colour(params.dark, params.colour_jitter, rng);
  const Colour b = palette_colour(params.light, params.colour_jitter, rng);
  const long count = rng.uniform_int(params.blob_count_min, params.blob_count_max);
  struct Blob {
    double cy, cx, radius, weight;
  };
  std::vector<Blob> blobs;
  for (long i = 0; i < count; ++i) {
    blobs.push_back({rng.uniform(0.0, size), rng.uniform(0.0, size), rng.uniform(params.blob_radius_min, params.blob_radius_max) * size,
                     rng.uniform(0.6, 1.0)});
  }
  ImageTensor img(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double field = 0.0;
      for (const Blob& blob : blobs) {
        const double d2 = (y - blob.cy) * (y - blob.cy) + (x - blob.cx) * (x - blob.cx);
        field += blob.weight * std::exp(-d2 / (2.0 * blob.radius * blob.radius));
      }
      const double t = std::min(field, 1.0);
      for (int c = 0; c < 3; ++c) {
        const auto k = static_cast<std::size_t>(c);
        img(y, x, c) = static_cast<float>(t * a[k] + (1.0 - t) * b[k]);
      }
    }
  }
  return img;
}

TextureDataset make_texture_dataset(int count, int size, std::uint64_t seed, const std::string& id_prefix,
                                    const TextureParams& params) {
  if (count < 1) {
    throw ArgumentError("dataset size must be positive");
  }
  TextureDataset out;
  for (int i = 0; i < count; ++i) {
    char id[64];
    std::snprintf(id, sizeof id, "%s-%04d", id_prefix.c_str(), i);
    Rng64 rng(derive_image_seed(seed, id));
    const int label = i % 2;
    out.ids.emplace_back(id);
    out.images.push_back(label == 0 ? checker_texture(size, rng, params) : blob_texture(size, rng, params));
    out.labels.push_back(label);
  }
  return out;
}

} // namespace histobench::synthetic
