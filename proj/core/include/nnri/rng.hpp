#pragma once

#include <bit>
#include <cstdint>

namespace nnri {

// SplitMix64 finalizer; full-avalanche 64-bit hash.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stage tags keep substreams of different pipeline steps disjoint.
enum class Stream : std::uint64_t {
  kSize = 1,
  kDetailCount,
  kDetails,
  kSampling,
  kResponse,
  kNoise,
  kGeneric,
};

// Counter-based generator: the sequence is a pure function of
// (seed, purpose, key1, key2), so every unit / stratum / replicate owns an
// independent stream and generation order never matters. Usable anywhere a
// UniformRandomBitGenerator is expected.
class SubstreamRng {
 public:
  using result_type = std::uint64_t;

  SubstreamRng(std::uint64_t seed, Stream purpose, std::uint64_t key1 = 0,
               std::uint64_t key2 = 0)
      : state_(derive(seed, purpose, key1, key2)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~0ULL; }

  result_type operator()() {
    state_ += kGamma;
    return mix64(state_);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1).
  double uniform_pos() {
    double u;
    do {
      u = uniform01();
    } while (u == 0.0);
    return u;
  }

  // Unbiased integer in [0, n), n >= 1.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t mask = ~0ULL >> std::countl_zero(n | 1ULL);
    std::uint64_t v;
    do {
      v = (*this)() & mask;
    } while (v >= n);
    return v;
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  static constexpr std::uint64_t derive(std::uint64_t seed, Stream purpose,
                                        std::uint64_t k1, std::uint64_t k2) {
    std::uint64_t s = mix64(seed ^ 0x5851f42d4c957f2dULL);
    s = mix64(s ^ mix64(static_cast<std::uint64_t>(purpose) + 0x632be59bd9b4e019ULL));
    s = mix64(s ^ mix64(k1 + 0x9e3779b97f4a7c15ULL));
    s = mix64(s ^ mix64(k2 + 0xd1b54a32d192ed03ULL));
    return s;
  }

  std::uint64_t state_;
};

// Child seed for per-replicate / per-stage streams.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                    std::uint64_t b = 0) {
  return mix64(mix64(seed ^ 0x2545f4914f6cdd1dULL) ^ mix64(a + 0x14057b7ef767814fULL) ^
               mix64(b + 0x27d4eb2f165667c5ULL));
}

}  // namespace nnri
