#include "gcnrn/rng.hpp"

#include <cmath>
#include <numbers>

namespace gcnrn {

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

double SeededRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t SeededRng::uniform_index(std::uint64_t bound) {
  // [threshold, 2^64) holds a whole number of copies of every residue.
  const std::uint64_t threshold = (0 - bound) % bound;
  std::uint64_t r = engine_();
  while (r < threshold) r = engine_();
  return r % bound;
}

double SeededRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

int SeededRng::sign() { return (engine_() >> 63) ? 1 : -1; }

SeededRng SeededRng::derive(std::uint64_t stream) const {
  return SeededRng(mix_seed(seed_ ^ mix_seed(stream + 1)));
}

}  // namespace gcnrn
