#include "medvp/seed.hpp"

#include <limits>

#include "medvp/types.hpp"

namespace medvp {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t splitmix_finalize(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view record_id) {
  if (record_id.empty()) throw Error("derive_seed: record id must be non-empty");
  std::uint64_t h = kFnvOffset;
  for (int i = 0; i < 8; ++i) {
    h ^= (master_seed >> (8 * i)) & 0xffU;
    h *= kFnvPrime;
  }
  for (char c : record_id) {
    h ^= static_cast<unsigned char>(c);
    h *= kFnvPrime;
  }
  return splitmix_finalize(h);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw Error("Rng::below: n must be positive");
  // Rejection sampling keeps the result exactly uniform.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) throw Error("Rng::uniform_int: empty range");
  auto span = static_cast<std::uint64_t>(static_cast<long long>(hi) - lo) + 1;
  return static_cast<int>(lo + static_cast<long long>(below(span)));
}

double Rng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

}  // namespace medvp
