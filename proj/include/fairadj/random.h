#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace fairadj {

// Seeded 64-bit generator with platform-independent derived draws.
//
// std::mt19937_64 has a fully specified output sequence; the standard
// distributions do not, so uniform/normal/bounded draws are computed here
// directly from the raw 64-bit words.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform();

  // Uniform integer in [0, bound) by rejection sampling (no modulo bias).
  std::uint64_t below(std::uint64_t bound);

  // Standard normal via Box-Muller; the second variate is cached.
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Fisher-Yates: for i = n-1 down to 1, swap values[i] with values[below(i+1)].
template <typename T>
void shuffle(std::span<T> values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace fairadj
