#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace memrank {

struct InteractionRecord {
  std::string user_id;
  std::string item_id;
  int64_t timestamp = 0;

  bool operator==(const InteractionRecord&) const = default;
};

// chronological per-user event sequence; ties keep input row order
struct UserHistory {
  std::string user_id;
  std::vector<InteractionRecord> events;
};

struct ItemRecord {
  std::string item_id;
  std::string title;
  // unique keys in input order; list-valued fields arrive pre-joined with ", "
  std::vector<std::pair<std::string, std::string>> metadata;
};

class ItemCatalog {
 public:
  // identical re-definitions are deduped; a second definition with a
  // different title is a catalog-conflict error
  void add(ItemRecord rec);
  const ItemRecord* find(const std::string& item_id) const;
  const std::vector<ItemRecord>& items() const { return items_; }
  size_t size() const { return items_.size(); }

 private:
  std::vector<ItemRecord> items_;
  std::unordered_map<std::string, size_t> by_id_;
};

// next-item example: everything before t, then the event at t
struct Example {
  std::string user_id;
  std::vector<InteractionRecord> prefix;
  InteractionRecord target;
};

struct SplitCounts {
  size_t examples_total = 0;
  size_t train_pool = 0;
  size_t val_pool = 0;
  size_t test_pool = 0;
};

struct SplitBundle {
  std::vector<Example> train;
  std::vector<Example> validation;
  std::vector<Example> test;
  std::vector<InteractionRecord> memory_pool;
  std::unordered_map<std::string, uint64_t> catalog_frequency;
  SplitCounts counts;
  uint64_t seed = 0;
  std::optional<int64_t> earliest_test_ts;
};

struct IngestStats {
  size_t interaction_rows = 0;
  size_t dropped_unknown_item = 0;
};

struct IngestResult {
  std::vector<UserHistory> histories;  // users in first-appearance order
  ItemCatalog catalog;
  IngestStats stats;
};

// interactions: user_id, item_id, timestamp columns; catalog: item_id, title,
// then key=value columns. Tab- or comma-delimited, sniffed per file from the
// first data line. Rows referencing unknown items are dropped and counted.
IngestResult ingest_interactions(std::istream& interactions, std::istream& catalog);
IngestResult ingest_files(const std::string& interactions_path, const std::string& catalog_path);

std::vector<UserHistory> filter_min_history(std::vector<UserHistory> histories,
                                            size_t min_events = 10);

struct SplitConfig {
  std::array<uint32_t, 3> ratio{8, 1, 1};
  size_t n_train = 4096;  // 0 keeps the whole pool
  size_t n_val = 512;
  size_t n_test = 1000;
  uint64_t seed = 0;
  size_t memory_cap = 0;  // 0 = uncapped
  bool no_lookahead = true;
};

// Forms per-user chronological next-item examples, partitions each user's
// example list earliest->train / middle->val / latest->test by the ratio,
// subsamples each split uniformly without replacement under the seed, and
// collects every interaction not touched by a sampled example into the
// memory pool (optionally capped, optionally truncated at the earliest
// sampled test-target timestamp).
SplitBundle split_and_subsample(const std::vector<UserHistory>& histories, const SplitConfig& cfg);

std::unordered_map<std::string, uint64_t> item_frequencies(const std::vector<UserHistory>& histories);

// examples whose target sits in the bottom `quantile` of items ranked by
// (frequency asc, item_id asc); quantile must be in (0, 1]
std::vector<Example> long_tail_slice(const std::vector<Example>& test_examples,
                                     const std::unordered_map<std::string, uint64_t>& catalog_frequency,
                                     double quantile = 0.2);

// --- persistence (line-delimited json) ---

void save_examples(const std::vector<Example>& examples, const std::string& path);
std::vector<Example> load_examples(const std::string& path);

void save_interactions(const std::vector<InteractionRecord>& records, const std::string& path);
std::vector<InteractionRecord> load_interactions(const std::string& path);

void save_catalog(const ItemCatalog& catalog, const std::string& path);
ItemCatalog load_catalog(const std::string& path);

void save_frequencies(const std::unordered_map<std::string, uint64_t>& freq, const std::string& path);
std::unordered_map<std::string, uint64_t> load_frequencies(const std::string& path);

// writes train/validation/test/memory_pool/frequency files plus
// split_manifest.json (seed, counts, caps, per-file digests) into dir
void save_bundle(const SplitBundle& bundle, const SplitConfig& cfg, const std::string& dir);
SplitBundle load_bundle(const std::string& dir);

uint64_t file_digest(const std::string& path);

}  // namespace memrank
