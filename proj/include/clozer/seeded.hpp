#ifndef CLOZER_SEEDED_HPP_
#define CLOZER_SEEDED_HPP_

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace clozer {

// Fisher-Yates shuffle driven by mt19937_64 with an explicit bounded draw,
// so the permutation for a given seed is the same on every standard library.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t draw;
    do {
      draw = rng();
    } while (draw >= limit);
    std::swap(items[i - 1], items[static_cast<std::size_t>(draw % bound)]);
  }
}

}  // namespace clozer

#endif  // CLOZER_SEEDED_HPP_
