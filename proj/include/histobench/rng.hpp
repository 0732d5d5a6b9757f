#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace histobench {

/// SplitMix64 output finalizer (Stafford variant 13).
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const char ch : bytes) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Seed for one image: mix(global_seed XOR fnv1a64(image_id)).
constexpr std::uint64_t derive_image_seed(std::uint64_t global_seed, std::string_view image_id) {
  return splitmix64_mix(global_seed ^ fnv1a64(image_id));
}

/// Portable SplitMix64 generator with fixed uniform, Gaussian and Poisson
/// recipes. Single-owner: copy it to fork a stream, never share it.
class Rng64 {
public:
  explicit Rng64(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return splitmix64_mix(state_);
  }

  /// u = (next >> 11) * 2^-53, in [0,1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi);

  /// Uniform integer in the closed range [lo, hi].
  long uniform_int(long lo, long hi);

  /// Box–Muller: each pair of uniforms yields the cosine variate first, the
  /// sine variate on the following call.
  double gaussian();

  /// Knuth multiplication method; rate restricted to [0, 100].
  long poisson(double lambda);

  std::uint64_t state() const { return state_; }

private:
  std::uint64_t state_;
  std::optional<double> cached_gaussian_;
};

} // namespace histobench
