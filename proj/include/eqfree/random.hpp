#pragma once
// Deterministic random sources.  mt19937_64 supplies the bits, but the
// uniform and normal transforms are explicit here because the standard
// distributions are implementation-defined: the same seed must give the same
// stream on every platform.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace eqfree {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform on [0, 1): top 53 bits of the generator output.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; pairs are generated together and the
  /// spare is handed out on the next call.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Stateless splitmix64-style mixer.
inline std::uint64_t hash_index(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Index-addressed uniform on [0, 1): every lattice site gets a noise value
/// that depends only on (seed, site index), so a patch run and a full-domain
/// run sharing lattice sites see identical noise.
inline double uniform_at(std::uint64_t seed, std::uint64_t index) {
  return static_cast<double>(hash_index(seed ^ hash_index(index)) >> 11) *
         0x1.0p-53;
}

}  // namespace eqfree
