#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hrpose {

// Seeded generator with platform-independent draws (mt19937_64 is fully
// specified; the distributions below are implemented here rather than taken
// from <random>, whose algorithms vary by standard library).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  // A generator whose stream depends only on (seed, name).
  static Rng substream(std::uint64_t seed, std::string_view name);

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t fnv1a(std::string_view text);

}  // namespace hrpose
