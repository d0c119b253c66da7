#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace memrank {

inline constexpr uint64_t kFnvOffset = 1469598103934665603ull;
inline constexpr uint64_t kFnvPrime = 1099511628211ull;

inline uint64_t fnv1a(std::string_view s, uint64_t h = kFnvOffset) {
  for (unsigned char c : s) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

inline uint64_t fnv1a_u64(uint64_t v, uint64_t h = kFnvOffset) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= kFnvPrime;
  }
  return h;
}

std::string fnv_hex(uint64_t h);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
// trims and squeezes internal whitespace runs down to a single space
std::string collapse_whitespace(std::string_view s);
std::vector<std::string> split(std::string_view s, char delim);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// character span of one whitespace-delimited token, [begin, end)
struct TokenSpan {
  size_t begin = 0;
  size_t end = 0;
};

std::vector<TokenSpan> token_spans(std::string_view s);
size_t token_count(std::string_view s);

bool starts_with_ws(std::string_view s);
bool ends_with_ws(std::string_view s);

}  // namespace memrank
