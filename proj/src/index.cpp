#include "memrank/index.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace memrank {

namespace {
constexpr char kMagic[4] = {'M', 'R', 'F', 'I'};
constexpr uint32_t kVersion = 1;
}  // namespace

FlatIndex FlatIndex::build(const std::vector<MemoryDocument>& corpus, const Embedder& embedder) {
  for (size_t i = 0; i < corpus.size(); ++i)
    if (corpus[i].doc_id != i)
      throw std::invalid_argument("build_index: doc_ids must be dense from 0");

  FlatIndex index;
  index.embedder_ = &embedder;
  index.dim_ = embedder.dim();
  index.docs_ = corpus;
  index.digest_ = corpus_digest(corpus);
  index.rows_.resize(corpus.size() * index.dim_);
  index.norms_.resize(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    Vector v = embedder.embed(corpus[i].text);
    if (v.dim() != index.dim_) throw std::runtime_error("build_index: embedder dimension drift");
    std::copy(v.values.begin(), v.values.end(), index.rows_.begin() + i * index.dim_);
    index.norms_[i] = v.empty_input ? 0.0 : detail::norm(v.values.data(), index.dim_);
  }
  return index;
}

std::vector<Hit> FlatIndex::search(const std::string& query, size_t k) const {
  if (k == 0 || docs_.empty()) return {};

  Vector q = embedder_->embed(query);
  const double qnorm = q.empty_input ? 0.0 : detail::norm(q.values.data(), q.dim());

  std::vector<std::pair<double, uint32_t>> scored;
  scored.reserve(docs_.size());
  for (size_t i = 0; i < docs_.size(); ++i) {
    double s = detail::cosine_with_norms(q.values.data(), rows_.data() + i * dim_, dim_, qnorm,
                                         norms_[i]);
    scored.emplace_back(s, static_cast<uint32_t>(i));
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });

  size_t n = std::min(k, scored.size());
  std::vector<Hit> hits;
  hits.reserve(n);
  for (size_t i = 0; i < n; ++i)
    hits.push_back(Hit{scored[i].second, scored[i].first, docs_[scored[i].second].text});
  return hits;
}

std::string FlatIndex::retrieve(const std::string& query) const {
  auto hits = search(query, 1);
  return hits.empty() ? std::string{} : hits[0].text;
}

void FlatIndex::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("index: cannot write " + path);
  out.write(kMagic, 4);
  uint32_t version = kVersion;
  uint32_t dim = static_cast<uint32_t>(dim_);
  uint64_t count = docs_.size();
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  out.write(reinterpret_cast<const char*>(&digest_), sizeof digest_);
  out.write(reinterpret_cast<const char*>(rows_.data()),
            static_cast<std::streamsize>(rows_.size() * sizeof(float)));
  if (!out) throw std::runtime_error("index: short write to " + path);
}

FlatIndex FlatIndex::load(const std::string& path, const std::vector<MemoryDocument>& corpus,
                          const Embedder& embedder) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("index: cannot read " + path);
  char magic[4];
  uint32_t version = 0, dim = 0;
  uint64_t count = 0, digest = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&dim), sizeof dim);
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  in.read(reinterpret_cast<char*>(&digest), sizeof digest);
  if (!in || std::memcmp(magic, kMagic, 4) != 0 || version != kVersion)
    throw std::runtime_error("index: bad header in " + path);
  if (digest != corpus_digest(corpus))
    throw std::runtime_error("index: corpus digest mismatch for " + path);
  if (dim != embedder.dim()) throw std::runtime_error("index: embedder dimension mismatch");

  FlatIndex index;
  index.embedder_ = &embedder;
  index.dim_ = dim;
  index.docs_ = corpus;
  index.digest_ = digest;
  index.rows_.resize(count * dim);
  in.read(reinterpret_cast<char*>(index.rows_.data()),
          static_cast<std::streamsize>(index.rows_.size() * sizeof(float)));
  if (!in) throw std::runtime_error("index: truncated vectors in " + path);
  index.norms_.resize(count);
  for (size_t i = 0; i < count; ++i)
    index.norms_[i] = detail::norm(index.rows_.data() + i * dim, dim);
  return index;
}

}  // namespace memrank
