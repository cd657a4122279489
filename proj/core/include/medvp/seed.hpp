#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace medvp {

/// Per-record seed. FNV-1a (64-bit) over the 8 little-endian bytes of
/// `master_seed` followed by the bytes of `record_id`, then passed through
/// the SplitMix64 finalizer. This definition is frozen: changing it
/// changes every rendered image.
///
/// Throws Error if `record_id` is empty.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view record_id);

/// Deterministic random source. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; the distributions below are defined
/// here rather than taken from <random> because the standard distributions
/// are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi);
  /// Uniform real in [0, 1) with 53 bits of resolution.
  double uniform01();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace medvp
