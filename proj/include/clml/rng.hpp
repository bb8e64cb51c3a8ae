#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace clml {

/// Seeded random stream. Streams for different components are derived from
/// one user seed plus a name, so e.g. the "data" and "init" streams are
/// independent of each other.
///
/// The distributions are implemented here rather than taken from <random>:
/// std::uniform_real_distribution and friends are implementation-defined,
/// and generated files must be bit-identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  /// Independent stream named `name` under `seed`.
  static Rng derive(std::uint64_t seed, std::string_view name);
  /// Child stream of this one; does not advance this stream.
  Rng split(std::string_view name) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal (Box-Muller, one value per call).
  double normal();
  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace clml
