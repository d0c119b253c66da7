#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace memrank {

struct Vector {
  std::vector<float> values;
  bool empty_input = false;  // set when the source text was empty
  size_t dim() const { return values.size(); }
};

// Cosine similarity, clamped to [-1, 1] against rounding. Empty-flagged
// inputs compare as 0. Throws std::invalid_argument on dimension mismatch.
double cosine(const Vector& a, const Vector& b);

namespace detail {
double dot(const float* a, const float* b, size_t n);
double norm(const float* v, size_t n);
// shared by cosine() and the flat index so both paths produce bit-identical
// scores for identical inputs
double cosine_with_norms(const float* a, const float* b, size_t n, double na, double nb);
}  // namespace detail

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual Vector embed(const std::string& text) const = 0;
  virtual size_t dim() const = 0;
};

// Feature-hashed bag of lowercase character 3-grams with signed buckets,
// L2-normalized. Deterministic, needs no model files; real deployments swap
// in external vectors via VectorTable or a remote encoder.
//
// Text shorter than three characters (after lowercasing and whitespace
// collapsing) hashes as a single gram so that only empty text maps to the
// zero vector.
class HashEmbedder final : public Embedder {
 public:
  explicit HashEmbedder(size_t dim = 256);
  Vector embed(const std::string& text) const override;
  size_t dim() const override { return dim_; }

 private:
  size_t dim_;
};

// Keyed table of externally produced vectors: one `key<TAB>f0 f1 ... fn`
// record per line. Vectors are re-normalized to unit length on load; ragged
// dimensions or non-finite entries are format errors. Unknown keys embed as
// flagged zero vectors.
class VectorTable final : public Embedder {
 public:
  static VectorTable parse(std::istream& in);
  static VectorTable load_file(const std::string& path);

  Vector embed(const std::string& key) const override;
  size_t dim() const override { return dim_; }
  size_t size() const { return table_.size(); }

 private:
  size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<float>> table_;
};

// scales v to unit L2 norm; zero vectors are left untouched
void normalize_l2(std::vector<float>& v);

}  // namespace memrank
