#ifndef UALIGN_RNG_HPP_
#define UALIGN_RNG_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace ualign {

// splitmix64 finalizer; used to combine seeds into independent substreams.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

// Seed for a named substream, e.g. derive_seed(global, "align").
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

// Random stream over std::mt19937_64. The distribution transforms are
// written out here rather than taken from <random>, whose distributions
// are allowed to differ between standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller.
  double normal();

  // Uniform integer in [0, n), rejection sampled.
  std::size_t below(std::size_t n);

  // Index drawn from a probability vector (need not be exactly normalized).
  std::size_t categorical(std::span<const double> probabilities);

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ualign

#endif  // UALIGN_RNG_HPP_
