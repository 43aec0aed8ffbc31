#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace dh {

// Deterministic random source. The raw stream is std::mt19937_64 (whose output
// sequence the standard pins down exactly); every value transform is written
// out here instead of using std::*_distribution, whose mappings are
// implementation-defined and would break cross-toolchain reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; caches the second draw of each pair.
  double normal();

  // Unbiased integer in [0,n) by rejection.
  std::uint64_t below(std::uint64_t n);

  // Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stable per-purpose seed derivation so independent streams (init, shuffle,
// dropout, split, ...) never share state.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

}  // namespace dh
