#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace gcnrn {

/// Seeded random stream with platform-independent output.
///
/// The raw generator is std::mt19937_64, whose recurrence is fixed by the
/// C++ standard. The standard distributions are implementation-defined, so
/// every derived draw (uniform reals, integers, normals) is computed here:
///   - uniform():      top 53 bits of one raw draw, scaled into [0, 1)
///   - uniform_index(): rejection sampling on the raw 64-bit draw
///   - normal():       Box-Muller, caching the second variate
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_index(std::uint64_t bound);
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  /// Uniform draw from {-1, +1}.
  int sign();
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(values[i - 1], values[j]);
    }
  }
  template <typename T>
  void shuffle(std::vector<T>& values) {
    shuffle(std::span<T>(values));
  }

  /// Independent child stream; identical (seed, stream) pairs give identical children.
  SeededRng derive(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer, used to decorrelate derived seeds.
std::uint64_t mix_seed(std::uint64_t x);

}  // namespace gcnrn
