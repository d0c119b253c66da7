#include "memrank/grounding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "memrank/util.hpp"

namespace memrank {

void RewardConfig::validate() const {
  if (cutoffs.empty() || cutoffs.size() != weights.size())
    throw std::invalid_argument("reward config: cutoffs and weights must be non-empty and aligned");
  for (size_t i = 1; i < cutoffs.size(); ++i)
    if (cutoffs[i] <= cutoffs[i - 1])
      throw std::invalid_argument("reward config: cutoffs must be strictly increasing");
  for (double w : weights)
    if (!(w > 0.0)) throw std::invalid_argument("reward config: weights must be positive");
  if (candidate_n < cutoffs.back())
    throw std::invalid_argument("reward config: candidate_n must cover the largest cutoff");
}

std::optional<size_t> CandidateList::rank_of(const std::string& item_id) const {
  for (size_t i = 0; i < items.size(); ++i)
    if (items[i].item_id == item_id) return i + 1;
  return std::nullopt;
}

GroundingIndex::GroundingIndex(const ItemCatalog& catalog, const Embedder& embedder)
    : embedder_(&embedder), dim_(embedder.dim()) {
  ids_.reserve(catalog.size());
  titles_.reserve(catalog.size());
  rows_.resize(catalog.size() * dim_);
  norms_.resize(catalog.size());
  size_t i = 0;
  for (const auto& item : catalog.items()) {
    ids_.push_back(item.item_id);
    titles_.push_back(item.title);
    Vector v = embedder.embed(item.title);
    std::copy(v.values.begin(), v.values.end(), rows_.begin() + i * dim_);
    norms_[i] = v.empty_input ? 0.0 : detail::norm(v.values.data(), dim_);
    ++i;
  }
}

std::string strip_answer_quotes(const std::string& answer) {
  std::string out;
  out.reserve(answer.size());
  for (char c : answer)
    if (c != '"') out += c;
  return trim(out);
}

CandidateList GroundingIndex::ground(const std::optional<std::string>& answer_text, size_t n) const {
  CandidateList out;
  if (!answer_text) return out;
  const std::string cleaned = strip_answer_quotes(*answer_text);
  if (cleaned.empty()) return out;

  Vector q = embedder_->embed(cleaned);
  const double qnorm = q.empty_input ? 0.0 : detail::norm(q.values.data(), dim_);

  std::vector<size_t> order(ids_.size());
  std::vector<double> scores(ids_.size());
  for (size_t i = 0; i < ids_.size(); ++i) {
    order[i] = i;
    scores[i] = detail::cosine_with_norms(q.values.data(), rows_.data() + i * dim_, dim_, qnorm,
                                          norms_[i]);
  }
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids_[a] < ids_[b];
  });

  size_t keep = std::min(n, order.size());
  out.items.reserve(keep);
  for (size_t i = 0; i < keep; ++i) out.items.push_back({ids_[order[i]], scores[order[i]]});
  return out;
}

CandidateList ground(const std::optional<std::string>& answer_text, const ItemCatalog& catalog,
                     const Embedder& embedder, size_t n) {
  if (catalog.size() == 0) throw std::invalid_argument("ground: empty catalog");
  return GroundingIndex(catalog, embedder).ground(answer_text, n);
}

RewardBreakdown reward(const CandidateList& candidates, const std::string& gt_item, bool parse_ok,
                       const RewardConfig& config) {
  config.validate();
  RewardBreakdown out;
  out.rank_of_truth = candidates.rank_of(gt_item);
  if (out.rank_of_truth) {
    for (size_t i = 0; i < config.cutoffs.size(); ++i)
      if (*out.rank_of_truth <= config.cutoffs[i]) out.accuracy_term += config.weights[i];
  }
  out.parse_term = parse_ok ? 0.0 : -config.lambda;
  out.total = out.accuracy_term + out.parse_term;
  return out;
}

double hit_ratio(const std::vector<std::optional<size_t>>& ranks, size_t n) {
  if (ranks.empty()) throw std::invalid_argument("hit_ratio: no results");
  double hits = 0.0;
  for (const auto& r : ranks)
    if (r && *r <= n) hits += 1.0;
  return hits / static_cast<double>(ranks.size());
}

double ndcg(const std::vector<std::optional<size_t>>& ranks, size_t n) {
  if (ranks.empty()) throw std::invalid_argument("ndcg: no results");
  double sum = 0.0;
  for (const auto& r : ranks)
    if (r && *r <= n) sum += 1.0 / std::log2(static_cast<double>(*r) + 1.0);
  return sum / static_cast<double>(ranks.size());
}

}  // namespace memrank
