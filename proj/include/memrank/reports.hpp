#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "memrank/dataset.hpp"
#include "memrank/episode.hpp"
#include "memrank/grounding.hpp"
#include "memrank/index.hpp"
#include "memrank/profile.hpp"

namespace memrank {

struct TrajectoryStat {
  size_t step = 0;
  double retrieval_calls = 0.0;
  double generated_tokens = 0.0;
};

struct BehaviorWindow {
  size_t window_index = 0;
  size_t step_begin = 0;  // [step_begin, step_end)
  size_t step_end = 0;
  double avg_retrieval_calls = 0.0;
  double avg_generated_tokens = 0.0;
  size_t count = 0;
};

// buckets trajectories by step windows of the given size and averages the
// per-episode retrieval calls and generated tokens; window_size must be >= 1
std::vector<BehaviorWindow> behavior_stats(const std::vector<TrajectoryStat>& trajectories,
                                           size_t window_size);

std::vector<TrajectoryStat> load_trajectory_stats(const std::string& path);
void save_behavior_windows(const std::vector<BehaviorWindow>& windows, const std::string& path);

struct EvalOptions {
  std::vector<size_t> cutoffs{5, 10};
  size_t candidate_n = 100;
  double long_tail_quantile = 0.2;
  size_t workers = 1;
  EpisodeLimits limits{};
  AblationFlags ablation{};  // prompt-variant flags, mirrored from the corpus build
};

struct EvalCase {
  std::string user_id;
  std::string gt_item;
  int64_t target_ts = 0;
  std::optional<size_t> rank;
  bool parse_ok = false;
  size_t retrieval_calls = 0;
  size_t generated_tokens = 0;
  std::optional<std::string> answer;
};

struct MetricRow {
  std::string slice;  // "full" or "long_tail"
  size_t cutoff = 0;
  double hr = 0.0;
  double ndcg = 0.0;
  size_t count = 0;
};

struct EvalReport {
  std::vector<EvalCase> cases;
  std::vector<MetricRow> rows;
};

// fresh policy per case so evaluation can fan out across workers
using PolicyFactory = std::function<std::unique_ptr<Policy>(const Example& example, uint64_t seed)>;

// Runs one episode per test example, grounds the answer against the catalog,
// and reports HR/NDCG at each cutoff over the full test set and the long-tail
// slice. Deterministic for a fixed seed regardless of worker count.
EvalReport evaluate(const PolicyFactory& make_policy, const SplitBundle& bundle,
                    const FlatIndex& index, const ItemCatalog& catalog,
                    const Embedder& grounding_embedder, const DatasetProfile& profile,
                    const EvalOptions& options, uint64_t seed);

void save_eval_report(const EvalReport& report, const std::string& path);

}  // namespace memrank
