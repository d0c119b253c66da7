#pragma once

#include <optional>
#include <string>
#include <vector>

#include "memrank/dataset.hpp"
#include "memrank/embedding.hpp"

namespace memrank {

struct RewardConfig {
  std::vector<size_t> cutoffs{1, 5, 10, 50, 100};
  std::vector<double> weights{0.5, 0.3, 0.1, 0.08, 0.02};
  double lambda = 1.0;
  size_t candidate_n = 100;  // grounded list length; must cover the largest cutoff

  void validate() const;  // throws std::invalid_argument
};

struct Candidate {
  std::string item_id;
  double score = 0.0;
};

struct CandidateList {
  std::vector<Candidate> items;  // scores non-increasing, ties by item_id asc
  std::optional<size_t> rank_of(const std::string& item_id) const;  // 1-based
  size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
};

// Embeds every catalog title once; ground() then ranks items by cosine
// between the answer embedding and the title embeddings. A missing or empty
// answer grounds to the empty list.
class GroundingIndex {
 public:
  GroundingIndex(const ItemCatalog& catalog, const Embedder& embedder);
  CandidateList ground(const std::optional<std::string>& answer_text, size_t n) const;
  size_t size() const { return ids_.size(); }

 private:
  const Embedder* embedder_;
  size_t dim_;
  std::vector<std::string> ids_;
  std::vector<std::string> titles_;
  std::vector<float> rows_;
  std::vector<double> norms_;
};

// convenience wrapper that builds a GroundingIndex per call
CandidateList ground(const std::optional<std::string>& answer_text, const ItemCatalog& catalog,
                     const Embedder& embedder, size_t n = 100);

struct RewardBreakdown {
  double accuracy_term = 0.0;  // sum of cutoff weights whose band covers the rank
  double parse_term = 0.0;     // 0 when parse_ok, -lambda otherwise
  double total = 0.0;
  std::optional<size_t> rank_of_truth;
};

RewardBreakdown reward(const CandidateList& candidates, const std::string& gt_item, bool parse_ok,
                       const RewardConfig& config);

// aggregate metrics over per-case ground-truth ranks (nullopt = not ranked);
// both throw std::invalid_argument on an empty result list
double hit_ratio(const std::vector<std::optional<size_t>>& ranks, size_t n);
double ndcg(const std::vector<std::optional<size_t>>& ranks, size_t n);

// answer text preprocessing used by ground(): quotes stripped, whitespace trimmed
std::string strip_answer_quotes(const std::string& answer);

}  // namespace memrank
