#pragma once

#include <cmath>
#include <cstdint>

namespace intona {

// Deterministic counter-based generator (splitmix64 over a keyed counter).
// Every random stream in the project is addressed by (root seed, purpose,
// stream index), so e.g. classifier training cannot perturb the draws the
// synthesizer sees.
enum class RngPurpose : uint64_t {
  Init = 0x1e5fa1d1u,
  Data = 0x2db7c0deu,
  Eps = 0x3c6ef372u,
  Vocoder = 0x4f1bbcdcu,
};

class Rng {
public:
  Rng(uint64_t root_seed, RngPurpose purpose, uint64_t stream = 0)
      : key_(mix(mix(root_seed ^ 0x9e3779b97f4a7c15ull) ^
                 static_cast<uint64_t>(purpose)) ^
             mix(stream + 0x632be59bd9b4e019ull)),
        counter_(0) {}

  // Derive an independent substream; draws on the child never affect this
  // generator's counter.
  Rng fork(uint64_t stream) const { return Rng(key_, stream); }

  uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ull * ++counter_); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Integer in [0, n).
  uint64_t below(uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller; two uniforms consumed per draw.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

private:
  Rng(uint64_t key, uint64_t stream)
      : key_(mix(key ^ mix(stream + 0x632be59bd9b4e019ull))), counter_(0) {}

  static uint64_t mix(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint64_t key_;
  uint64_t counter_;
};

}  // namespace intona
