#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ipred {

// Deterministic random source. Wraps mt19937_64 (whose output sequence is
// fixed by the standard) and draws uniforms/normals with our own transforms
// so results do not depend on the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Independent stream derived from this generator's seed and a name. Does
  // not advance this generator.
  Rng substream(std::string_view name) const;
  Rng substream(std::uint64_t index) const;

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);
  // Standard normal (Marsaglia polar method).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);
std::uint64_t hash_name(std::string_view name);

}  // namespace ipred
