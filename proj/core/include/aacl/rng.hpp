#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace aacl {

// Deterministic random source. The engine is std::mt19937_64 (its output
// stream is pinned by the standard); every distribution is derived here by
// hand so that draws are bit-identical across compilers and platforms.
// Standard-library distributions are never used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform in {0, ..., n-1}. Rejection sampling, no modulo bias.
  std::uint64_t uniform_index(std::uint64_t n);

  // Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(uniform_index(
                    static_cast<std::uint64_t>(hi - lo) + 1));
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller. Two uniforms per draw, no cached state.
  double gaussian();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Stable seed derivation for independent named streams: hashes (master, tag,
// index) so that consumers of one stream cannot perturb another.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::uint64_t index = 0);

}  // namespace aacl
