#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "histobench/image.hpp"
#include "histobench/rng.hpp"

namespace histobench::synthetic {

struct TextureParams {
  std::array<double, 3> dark{0.45, 0.30, 0.60};
  std::array<double, 3> light{0.90, 0.62, 0.78};
  double colour_jitter = 0.06;
  int period_min = 2;
  int period_max = 2;
  bool random_phase = false;
  int blob_count_min = 3;
  int blob_count_max = 6;
  double blob_radius_min = 0.12;  // fraction of the side
  double blob_radius_max = 0.25;
};

/// Class 0: high-frequency checkerboards. Class 1: smooth low-frequency blobs.
/// Both draw from the same two-colour palette so colour alone does not
/// separate them.
ImageTensor checker_texture(int size, Rng64& rng, const TextureParams& params = {});
ImageTensor blob_texture(int size, Rng64& rng, const TextureParams& params = {});

struct TextureDataset {
  std::vector<std::string> class_names{"checker", "blob"};
  std::vector<std::string> ids;
  std::vector<ImageTensor> images;
  std::vector<int> labels;
};

/// `count` images with alternating labels; image i uses the per-image seed of
/// its id under `seed`.
TextureDataset make_texture_dataset(int count, int size, std::uint64_t seed, const std::string& id_prefix = "tex",
                                    const TextureParams& params = {});

} // namespace histobench::synthetic
