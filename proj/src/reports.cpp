#include "memrank/reports.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "json.hpp"
#include "memrank/rng.hpp"
#include "memrank/util.hpp"

namespace memrank {

using nlohmann::json;

std::vector<BehaviorWindow> behavior_stats(const std::vector<TrajectoryStat>& trajectories,
                                           size_t window_size) {
  if (window_size == 0) throw std::invalid_argument("behavior_stats: window_size must be >= 1");
  std::map<size_t, BehaviorWindow> windows;
  for (const auto& t : trajectories) {
    const size_t w = t.step / window_size;
    auto& win = windows[w];
    win.window_index = w;
    win.step_begin = w * window_size;
    win.step_end = (w + 1) * window_size;
    win.avg_retrieval_calls += t.retrieval_calls;
    win.avg_generated_tokens += t.generated_tokens;
    ++win.count;
  }
  std::vector<BehaviorWindow> out;
  out.reserve(windows.size());
  for (auto& [_, win] : windows) {
    win.avg_retrieval_calls /= static_cast<double>(win.count);
    win.avg_generated_tokens /= static_cast<double>(win.count);
    out.push_back(win);
  }
  return out;
}

std::vector<TrajectoryStat> load_trajectory_stats(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<TrajectoryStat> out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    json j = json::parse(line);
    TrajectoryStat t;
    t.step = j.value("step", size_t{0});
    t.retrieval_calls = j.value("retrieval_calls", 0.0);
    t.generated_tokens = j.value("generated_tokens", 0.0);
    out.push_back(t);
  }
  return out;
}

void save_behavior_windows(const std::vector<BehaviorWindow>& windows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& w : windows)
    out << json{{"window", w.window_index},
                {"step_begin", w.step_begin},
                {"step_end", w.step_end},
                {"avg_retrieval_calls", w.avg_retrieval_calls},
                {"avg_generated_tokens", w.avg_generated_tokens},
                {"count", w.count}}
               .dump()
        << '\n';
}

EvalReport evaluate(const PolicyFactory& make_policy, const SplitBundle& bundle,
                    const FlatIndex& index, const ItemCatalog& catalog,
                    const Embedder& grounding_embedder, const DatasetProfile& profile,
                    const EvalOptions& options, uint64_t seed) {
  const auto& examples = bundle.test;
  EvalReport report;
  report.cases.resize(examples.size());
  if (examples.empty()) return report;

  GroundingIndex grounding(catalog, grounding_embedder);

  // per-case seeds fixed up front so worker count cannot change results
  std::vector<uint64_t> seeds(examples.size());
  Rng root(fnv1a_u64(seed, fnv1a("evaluate")));
  for (auto& s : seeds) s = root.next();

  auto run_case = [&](size_t i) {
    const Example& ex = examples[i];
    std::vector<std::string> titles;
    titles.reserve(ex.prefix.size());
    for (const auto& r : ex.prefix) {
      const ItemRecord* item = catalog.find(r.item_id);
      titles.push_back(item ? item->title : r.item_id);
    }
    auto policy = make_policy(ex, seeds[i]);
    Trajectory traj = run_episode(*policy, index, render_prompt(titles, profile, AblationFlags{}),
                                  options.limits);
    CandidateList cands = traj.parse_ok ? grounding.ground(traj.answer_text, options.candidate_n)
                                        : CandidateList{};
    EvalCase& out = report.cases[i];
    out.user_id = ex.user_id;
    out.gt_item = ex.target.item_id;
    out.target_ts = ex.target.timestamp;
    out.rank = cands.rank_of(ex.target.item_id);
    out.parse_ok = traj.parse_ok;
    out.retrieval_calls = traj.retrieval_calls;
    out.generated_tokens = traj.generated_tokens;
    out.answer = traj.answer_text;
  };

  const size_t workers = std::max<size_t>(1, options.workers);
  if (workers == 1) {
    for (size_t i = 0; i < examples.size(); ++i) run_case(i);
  } else {
    std::atomic<size_t> cursor{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        while (true) {
          size_t i = cursor.fetch_add(1);
          if (i >= examples.size()) return;
          run_case(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  auto add_rows = [&](const std::string& slice, const std::vector<std::optional<size_t>>& ranks) {
    if (ranks.empty()) return;
    for (size_t cutoff : options.cutoffs)
      report.rows.push_back(
          {slice, cutoff, hit_ratio(ranks, cutoff), ndcg(ranks, cutoff), ranks.size()});
  };

  std::vector<std::optional<size_t>> all_ranks;
  all_ranks.reserve(report.cases.size());
  for (const auto& c : report.cases) all_ranks.push_back(c.rank);
  add_rows("full", all_ranks);

  if (!bundle.catalog_frequency.empty()) {
    auto tail = long_tail_slice(examples, bundle.catalog_frequency, options.long_tail_quantile);
    std::unordered_set<const Example*> tail_set;
    for (const auto& ex : tail) tail_set.insert(&ex);
    // match by (user, target) identity within the example list
    std::unordered_set<std::string> tail_keys;
    for (const auto& ex : tail)
      tail_keys.insert(ex.user_id + "\x1f" + ex.target.item_id + "\x1f" +
                       std::to_string(ex.target.timestamp));
    std::vector<std::optional<size_t>> tail_ranks;
    for (size_t i = 0; i < examples.size(); ++i) {
      const auto& ex = examples[i];
      if (tail_keys.count(ex.user_id + "\x1f" + ex.target.item_id + "\x1f" +
                          std::to_string(ex.target.timestamp)))
        tail_ranks.push_back(report.cases[i].rank);
    }
    add_rows("long_tail", tail_ranks);
  }
  return report;
}

void save_eval_report(const EvalReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& row : report.rows)
    out << json{{"type", "summary"},
                {"slice", row.slice},
                {"cutoff", row.cutoff},
                {"hr", row.hr},
                {"ndcg", row.ndcg},
                {"count", row.count}}
               .dump()
        << '\n';
  for (const auto& c : report.cases) {
    json j{{"type", "case"},
           {"user_id", c.user_id},
           {"gt_item", c.gt_item},
           {"target_ts", c.target_ts},
           {"parse_ok", c.parse_ok},
           {"retrieval_calls", c.retrieval_calls},
           {"generated_tokens", c.generated_tokens}};
    if (c.rank) j["rank"] = *c.rank;
    if (c.answer) j["answer"] = *c.answer;
    out << j.dump() << '\n';
  }
}

}  // namespace memrank
