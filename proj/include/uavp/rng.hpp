#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace uavp {

// Purpose tags keep RNG substreams disjoint across pipeline stages.
enum class StreamPurpose : std::uint64_t {
  VehicleSpawn = 1,
  Mobility = 2,
  Collection = 3,
  Evaluation = 4,
  RandomPlacement = 5,
  Synthetic = 6,
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// Derives a stream seed from (master_seed, purpose, indices) so parallel
// sample collection stays reproducible regardless of execution order.
inline std::uint64_t derive_seed(std::uint64_t master_seed, StreamPurpose purpose,
                                 std::uint64_t i0 = 0, std::uint64_t i1 = 0,
                                 std::uint64_t i2 = 0) {
  std::uint64_t s = master_seed;
  std::uint64_t h = detail::splitmix64(s);
  s ^= static_cast<std::uint64_t>(purpose);
  h ^= detail::splitmix64(s);
  s ^= i0;
  h ^= detail::splitmix64(s);
  s ^= i1;
  h ^= detail::splitmix64(s);
  s ^= i2;
  h ^= detail::splitmix64(s);
  return h;
}

// Seeded stream with hand-rolled variate transforms. std::mt19937_64 output
// is specified by the standard and the transforms below avoid the
// implementation-defined std::*_distribution, so sequences are identical
// across standard libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the sine component is kept as a spare.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * uniform();
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform integer in [0, n).
  std::uint64_t integer(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  // Index drawn proportionally to nonnegative weights.
  std::size_t weighted_index(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return weights.empty() ? 0 : weights.size() - 1;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline RngStream make_stream(std::uint64_t master_seed, StreamPurpose purpose,
                             std::uint64_t i0 = 0, std::uint64_t i1 = 0,
                             std::uint64_t i2 = 0) {
  return RngStream(derive_seed(master_seed, purpose, i0, i1, i2));
}

}  // namespace uavp
