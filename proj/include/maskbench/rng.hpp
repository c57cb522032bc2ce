#pragma once

#include <cstdint>
#include <vector>

namespace maskbench {

/// SplitMix64 finalizer. Every derived seed in the harness goes through this
/// function so that masks can be reproduced outside this code base:
///
///   z = x + 0x9E3779B97F4A7C15
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
std::uint64_t splitmix64(std::uint64_t x);

/// child = splitmix64(splitmix64(splitmix64(splitmix64(seed) ^ sample) ^ epoch) ^ batch)
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t sample, std::uint64_t epoch = 0,
                       std::uint64_t batch = 0);

/// Stream tags used in the `sample` slot for draws that are not per sample.
/// They sit at the top of the 64-bit range so they never collide with a sample id.
namespace stream {
inline constexpr std::uint64_t global_cells = 0xFFFF'FFFF'FFFF'FF01ULL;
inline constexpr std::uint64_t block_samples = 0xFFFF'FFFF'FFFF'FF02ULL;
inline constexpr std::uint64_t batch_order = 0xFFFF'FFFF'FFFF'FF03ULL;
inline constexpr std::uint64_t labels = 0xFFFF'FFFF'FFFF'FF04ULL;
inline constexpr std::uint64_t kfold = 0xFFFF'FFFF'FFFF'FF05ULL;
inline constexpr std::uint64_t transport = 0xFFFF'FFFF'FFFF'FF06ULL;
inline constexpr std::uint64_t trainer = 0xFFFF'FFFF'FFFF'FF07ULL;
}  // namespace stream

/// SplitMix64 sequence generator. The draw routines below are fixed
/// algorithms (not std:: distributions) so results are identical across
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();

  /// Uniform integer in [0, n) by rejection on the low residue; n must be > 0.
  std::uint64_t below(std::uint64_t n);

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform();

  /// Standard normal via Box-Muller (cosine branch only, two uniforms per draw).
  double normal();

  /// k distinct values from [0, n) by partial Fisher-Yates, in selection order.
  std::vector<std::uint32_t> choose(std::uint32_t n, std::uint32_t k);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace maskbench
