#include "memrank/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "memrank/util.hpp"

namespace memrank {

namespace detail {

double dot(const float* a, const float* b, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

double norm(const float* v, size_t n) { return std::sqrt(dot(v, v, n)); }

double cosine_with_norms(const float* a, const float* b, size_t n, double na, double nb) {
  if (na == 0.0 || nb == 0.0) return 0.0;
  double c = dot(a, b, n) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

}  // namespace detail

double cosine(const Vector& a, const Vector& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("cosine: dimension mismatch");
  if (a.empty_input || b.empty_input) return 0.0;
  const double na = detail::norm(a.values.data(), a.dim());
  const double nb = detail::norm(b.values.data(), b.dim());
  return detail::cosine_with_norms(a.values.data(), b.values.data(), a.dim(), na, nb);
}

void normalize_l2(std::vector<float>& v) {
  double n = detail::norm(v.data(), v.size());
  if (n == 0.0) return;
  for (float& x : v) x = static_cast<float>(x / n);
}

HashEmbedder::HashEmbedder(size_t dim) : dim_(dim) {
  if (dim == 0) throw std::invalid_argument("HashEmbedder: dim must be positive");
}

Vector HashEmbedder::embed(const std::string& text) const {
  Vector out;
  out.values.assign(dim_, 0.0f);

  const std::string norm_text = collapse_whitespace(to_lower(text));
  if (norm_text.empty()) {
    out.empty_input = true;
    return out;
  }

  auto add_gram = [&](std::string_view gram) {
    uint64_t h = fnv1a(gram);
    size_t idx = static_cast<size_t>(h % dim_);
    float sign = (h & 0x8000000000000000ull) ? -1.0f : 1.0f;
    out.values[idx] += sign;
  };

  if (norm_text.size() < 3) {
    add_gram(norm_text);
  } else {
    for (size_t i = 0; i + 3 <= norm_text.size(); ++i)
      add_gram(std::string_view(norm_text).substr(i, 3));
  }

  double n = detail::norm(out.values.data(), dim_);
  if (n == 0.0) {
    // opposing-sign bucket collisions cancelled everything; fall back to a
    // whole-string bucket so non-empty text never embeds to zero
    uint64_t h = fnv1a(norm_text, fnv1a("rescue"));
    out.values[static_cast<size_t>(h % dim_)] = 1.0f;
    return out;
  }
  for (float& x : out.values) x = static_cast<float>(x / n);
  return out;
}

VectorTable VectorTable::parse(std::istream& in) {
  VectorTable t;
  std::string line;
  size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("vector table: row " + std::to_string(row) + ": missing key separator");
    std::string key = line.substr(0, tab);
    std::istringstream vals(line.substr(tab + 1));
    std::vector<float> v;
    double x;
    while (vals >> x) {
      if (!std::isfinite(x))
        throw std::runtime_error("vector table: row " + std::to_string(row) + ": non-finite entry");
      v.push_back(static_cast<float>(x));
    }
    if (!vals.eof())
      throw std::runtime_error("vector table: row " + std::to_string(row) + ": malformed number");
    if (v.empty())
      throw std::runtime_error("vector table: row " + std::to_string(row) + ": empty vector");
    if (t.dim_ == 0) t.dim_ = v.size();
    if (v.size() != t.dim_)
      throw std::runtime_error("vector table: row " + std::to_string(row) + ": ragged dimension " +
                               std::to_string(v.size()) + " != " + std::to_string(t.dim_));
    normalize_l2(v);
    t.table_[key] = std::move(v);
  }
  return t;
}

VectorTable VectorTable::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("vector table: cannot open " + path);
  return parse(in);
}

Vector VectorTable::embed(const std::string& key) const {
  Vector out;
  auto it = table_.find(key);
  if (it == table_.end()) {
    out.values.assign(dim_ == 0 ? 1 : dim_, 0.0f);
    out.empty_input = true;
    return out;
  }
  out.values = it->second;
  return out;
}

}  // namespace memrank
