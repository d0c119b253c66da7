#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memrank/corpus.hpp"
#include "memrank/embedding.hpp"

namespace memrank {

struct Hit {
  uint32_t doc_id = 0;
  double score = 0.0;  // cosine similarity in [-1, 1]
  std::string text;
};

// Flat dense index: one stored embedding per document, exhaustive cosine
// scan per query. Immutable after build; concurrent searches need no
// synchronization. The embedder must outlive the index.
class FlatIndex {
 public:
  static FlatIndex build(const std::vector<MemoryDocument>& corpus, const Embedder& embedder);

  // top-k by (score desc, doc_id asc); returns min(k, size()) hits
  std::vector<Hit> search(const std::string& query, size_t k) const;

  // text of the single best hit; the blank placeholder (empty string) when
  // the index is empty
  std::string retrieve(const std::string& query) const;

  size_t size() const { return docs_.size(); }
  size_t dim() const { return dim_; }
  uint64_t stored_corpus_digest() const { return digest_; }
  const std::vector<MemoryDocument>& docs() const { return docs_; }

  void save(const std::string& path) const;
  // refuses to load vectors written for a different corpus
  static FlatIndex load(const std::string& path, const std::vector<MemoryDocument>& corpus,
                        const Embedder& embedder);

 private:
  FlatIndex() = default;

  const Embedder* embedder_ = nullptr;
  size_t dim_ = 0;
  std::vector<float> rows_;    // row-major size() x dim_
  std::vector<double> norms_;  // per-row L2 norm, cached at build
  std::vector<MemoryDocument> docs_;
  uint64_t digest_ = 0;
};

}  // namespace memrank
