#include "memrank/rng.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace memrank {

std::vector<size_t> Rng::sample_indices(size_t n, size_t k) {
  if (k > n) throw std::invalid_argument("sample_indices: k > n");
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  // partial Fisher-Yates: the first k slots end up with the sample
  for (size_t i = 0; i < k; ++i) {
    size_t j = i + static_cast<size_t>(below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace memrank
