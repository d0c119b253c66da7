#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "memrank/util.hpp"

namespace memrank {

// splitmix64 generator. The std engines are portable but the std
// distributions are not, and split/subsample outputs must be byte-identical
// for a given seed, so all bounded draws go through this class.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // unbiased draw in [0, n); n == 0 yields 0
  uint64_t below(uint64_t n) {
    if (n == 0) return 0;
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // derived stream; advances this generator
  Rng fork(uint64_t stream) { return Rng(fnv1a_u64(stream, fnv1a_u64(next()))); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices from [0, n), ascending; k must be <= n
  std::vector<size_t> sample_indices(size_t n, size_t k);

 private:
  uint64_t state_;
};

}  // namespace memrank
