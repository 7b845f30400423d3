#ifndef REPBIAS_RANDOM_H_
#define REPBIAS_RANDOM_H_

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace repbias {

// Named sub-seed derivation. Every random decision in the toolkit draws from
// a stream seeded by DeriveSeed(master, purpose[, index]) so that each stage
// is reproducible in isolation.
std::uint64_t DeriveSeed(std::uint64_t master, std::string_view purpose,
                         std::uint64_t index = 0);

// Small, portable PRNG (splitmix64 seeding + xoshiro256**). The standard
// library distributions are implementation-defined, so bounded draws and
// shuffles are done here to keep outputs identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t Next();
  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t Below(std::uint64_t bound);
  // Uniform double in [0, 1) with 53 random bits.
  double Uniform();
  // Standard normal via Box-Muller (uses two Uniform() draws).
  double Normal();

  template <typename T>
  void Shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(Below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

}  // namespace repbias

#endif  // REPBIAS_RANDOM_H_
