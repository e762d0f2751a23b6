/// @file core.hpp
/// Shared basics: error handling, deterministic RNG, small utilities.
#pragma once

#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace pym {

// Thrown on violated operation preconditions (bad degree, mismatched domain,
// under-resolved scale, ...).  CLI maps these to config/usage failures.
struct precondition_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when a numerical routine cannot deliver (flow divergence, eigensolver
// breakdown).  CLI maps these to exit code 3 after writing partial results.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define PYM_REQUIRE(cond, msg) \
  do { if (!(cond)) throw ::pym::precondition_error(msg); } while (0)

// ============================================================
// Deterministic RNG
// ============================================================
// splitmix64-seeded xoshiro-style generator with explicit double conversion,
// so that identically-seeded runs are bit-identical on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t z = seed;
    for (auto& w : s_) {
      z += 0x9e3779b97f4a7c15ull;
      std::uint64_t x = z;
      x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
      x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
      w = x ^ (x >> 31);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0,1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }
  // Uniform in [a,b).
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  // Log-uniform magnitude in [lo,hi], random sign.
  double log_uniform_signed(double lo, double hi) {
    double m = std::exp(uniform(std::log(lo), std::log(hi)));
    return (next_u64() & 1) ? m : -m;
  }
  // Standard normal (Box-Muller, one value per call for determinism).
  double normal() {
    double u1 = uniform(), u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + int(next_u64() % std::uint64_t(hi - lo + 1));
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

// FNV-1a 64-bit hash; used to fingerprint configs in reports.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace pym
