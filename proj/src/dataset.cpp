#include "memrank/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"
#include "memrank/rng.hpp"
#include "memrank/util.hpp"

namespace memrank {

using nlohmann::json;

void ItemCatalog::add(ItemRecord rec) {
  auto it = by_id_.find(rec.item_id);
  if (it != by_id_.end()) {
    if (items_[it->second].title != rec.title)
      throw std::runtime_error("catalog conflict: item " + rec.item_id + " redefined with title \"" +
                               rec.title + "\" (was \"" + items_[it->second].title + "\")");
    return;
  }
  by_id_.emplace(rec.item_id, items_.size());
  items_.push_back(std::move(rec));
}

const ItemRecord* ItemCatalog::find(const std::string& item_id) const {
  auto it = by_id_.find(item_id);
  return it == by_id_.end() ? nullptr : &items_[it->second];
}

namespace {

char sniff_delim(const std::string& line) { return line.find('\t') != std::string::npos ? '\t' : ','; }

ItemCatalog parse_catalog(std::istream& in) {
  ItemCatalog catalog;
  std::string line;
  size_t row = 0;
  char delim = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    if (delim == 0) delim = sniff_delim(line);
    auto cols = split(line, delim);
    if (cols.size() < 2)
      throw std::runtime_error("catalog: row " + std::to_string(row) + ": expected item_id and title");
    ItemRecord rec;
    rec.item_id = trim(cols[0]);
    rec.title = trim(cols[1]);
    if (rec.item_id.empty() || rec.title.empty())
      throw std::runtime_error("catalog: row " + std::to_string(row) + ": empty item_id or title");
    for (size_t i = 2; i < cols.size(); ++i) {
      std::string field = trim(cols[i]);
      if (field.empty()) continue;
      size_t eq = field.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("catalog: row " + std::to_string(row) + ": metadata field without '='");
      std::string key = trim(field.substr(0, eq));
      std::string value = trim(field.substr(eq + 1));
      auto existing = std::find_if(rec.metadata.begin(), rec.metadata.end(),
                                   [&](const auto& kv) { return kv.first == key; });
      if (existing != rec.metadata.end())
        existing->second += ", " + value;  // repeated key = list-valued field
      else
        rec.metadata.emplace_back(key, value);
    }
    catalog.add(std::move(rec));
  }
  return catalog;
}

}  // namespace

IngestResult ingest_interactions(std::istream& interactions, std::istream& catalog_src) {
  IngestResult out;
  out.catalog = parse_catalog(catalog_src);

  std::unordered_map<std::string, size_t> user_slot;
  std::string line;
  size_t row = 0;
  char delim = 0;
  while (std::getline(interactions, line)) {
    ++row;
    if (trim(line).empty()) continue;
    if (delim == 0) delim = sniff_delim(line);
    auto cols = split(line, delim);
    if (cols.size() != 3)
      throw std::runtime_error("ingest: row " + std::to_string(row) + ": expected 3 columns, got " +
                               std::to_string(cols.size()));
    InteractionRecord rec;
    rec.user_id = trim(cols[0]);
    rec.item_id = trim(cols[1]);
    std::string ts = trim(cols[2]);
    if (rec.user_id.empty() || rec.item_id.empty())
      throw std::runtime_error("ingest: row " + std::to_string(row) + ": empty user_id or item_id");
    try {
      size_t used = 0;
      rec.timestamp = std::stoll(ts, &used);
      if (used != ts.size()) throw std::invalid_argument(ts);
    } catch (const std::exception&) {
      throw std::runtime_error("ingest: row " + std::to_string(row) + ": bad timestamp \"" + ts + "\"");
    }
    ++out.stats.interaction_rows;
    if (out.catalog.find(rec.item_id) == nullptr) {
      ++out.stats.dropped_unknown_item;
      continue;
    }
    auto [it, inserted] = user_slot.try_emplace(rec.user_id, out.histories.size());
    if (inserted) out.histories.push_back(UserHistory{rec.user_id, {}});
    out.histories[it->second].events.push_back(std::move(rec));
  }

  for (auto& h : out.histories) {
    std::stable_sort(h.events.begin(), h.events.end(),
                     [](const InteractionRecord& a, const InteractionRecord& b) {
                       return a.timestamp < b.timestamp;
                     });
  }
  return out;
}

IngestResult ingest_files(const std::string& interactions_path, const std::string& catalog_path) {
  std::ifstream inter(interactions_path);
  if (!inter) throw std::runtime_error("ingest: cannot open " + interactions_path);
  std::ifstream cat(catalog_path);
  if (!cat) throw std::runtime_error("ingest: cannot open " + catalog_path);
  return ingest_interactions(inter, cat);
}

std::vector<UserHistory> filter_min_history(std::vector<UserHistory> histories, size_t min_events) {
  std::vector<UserHistory> out;
  out.reserve(histories.size());
  for (auto& h : histories)
    if (h.events.size() >= min_events) out.push_back(std::move(h));
  return out;
}

namespace {

struct TripleKey {
  uint64_t digest;
  bool operator<(const TripleKey& o) const { return digest < o.digest; }
};

uint64_t triple_digest(const InteractionRecord& r) {
  uint64_t h = fnv1a(r.user_id);
  h = fnv1a("\x1f", h);
  h = fnv1a(r.item_id, h);
  h = fnv1a("\x1f", h);
  return fnv1a_u64(static_cast<uint64_t>(r.timestamp), h);
}

// uniform subsample without replacement; 0 = keep all; preserves pool order
std::vector<Example> subsample(const std::vector<Example>& pool, size_t n, const char* split_name,
                               Rng& rng) {
  if (n == 0 || n == pool.size()) return pool;
  if (n > pool.size())
    throw std::runtime_error(std::string("split sizing: ") + split_name + " pool has " +
                             std::to_string(pool.size()) + " examples, requested " + std::to_string(n));
  auto idx = rng.sample_indices(pool.size(), n);
  std::vector<Example> out;
  out.reserve(n);
  for (size_t i : idx) out.push_back(pool[i]);
  return out;
}

}  // namespace

SplitBundle split_and_subsample(const std::vector<UserHistory>& histories, const SplitConfig& cfg) {
  const uint64_t rsum = cfg.ratio[0] + cfg.ratio[1] + cfg.ratio[2];
  if (rsum == 0) throw std::invalid_argument("split: ratio sums to zero");

  SplitBundle bundle;
  bundle.seed = cfg.seed;

  std::vector<Example> train_pool, val_pool, test_pool;
  for (const auto& h : histories) {
    if (h.events.size() < 2) continue;
    const size_t n = h.events.size() - 1;
    const size_t b1 = static_cast<size_t>(n * cfg.ratio[0] / rsum);
    const size_t b2 = static_cast<size_t>(n * (cfg.ratio[0] + cfg.ratio[1]) / rsum);
    for (size_t t = 1; t <= n; ++t) {
      Example ex;
      ex.user_id = h.user_id;
      ex.prefix.assign(h.events.begin(), h.events.begin() + t);
      ex.target = h.events[t];
      size_t slot = t - 1;
      if (slot < b1)
        train_pool.push_back(std::move(ex));
      else if (slot < b2)
        val_pool.push_back(std::move(ex));
      else
        test_pool.push_back(std::move(ex));
    }
  }

  bundle.counts.train_pool = train_pool.size();
  bundle.counts.val_pool = val_pool.size();
  bundle.counts.test_pool = test_pool.size();
  bundle.counts.examples_total = train_pool.size() + val_pool.size() + test_pool.size();

  Rng rng(fnv1a_u64(cfg.seed, fnv1a("split")));
  Rng train_rng = rng.fork(1), val_rng = rng.fork(2), test_rng = rng.fork(3), pool_rng = rng.fork(4);
  bundle.train = subsample(train_pool, cfg.n_train, "train", train_rng);
  bundle.validation = subsample(val_pool, cfg.n_val, "validation", val_rng);
  bundle.test = subsample(test_pool, cfg.n_test, "test", test_rng);

  std::unordered_set<uint64_t> used;
  auto mark = [&](const std::vector<Example>& exs) {
    for (const auto& ex : exs) {
      for (const auto& r : ex.prefix) used.insert(triple_digest(r));
      used.insert(triple_digest(ex.target));
    }
  };
  mark(bundle.train);
  mark(bundle.validation);
  mark(bundle.test);

  if (!bundle.test.empty()) {
    int64_t earliest = bundle.test.front().target.timestamp;
    for (const auto& ex : bundle.test) earliest = std::min(earliest, ex.target.timestamp);
    bundle.earliest_test_ts = earliest;
  }

  for (const auto& h : histories) {
    for (const auto& r : h.events) {
      if (used.count(triple_digest(r))) continue;
      if (cfg.no_lookahead && bundle.earliest_test_ts && r.timestamp > *bundle.earliest_test_ts)
        continue;
      bundle.memory_pool.push_back(r);
    }
  }

  if (cfg.memory_cap > 0 && bundle.memory_pool.size() > cfg.memory_cap) {
    auto idx = pool_rng.sample_indices(bundle.memory_pool.size(), cfg.memory_cap);
    std::vector<InteractionRecord> capped;
    capped.reserve(cfg.memory_cap);
    for (size_t i : idx) capped.push_back(std::move(bundle.memory_pool[i]));
    bundle.memory_pool = std::move(capped);
  }

  bundle.catalog_frequency = item_frequencies(histories);
  return bundle;
}

std::unordered_map<std::string, uint64_t> item_frequencies(const std::vector<UserHistory>& histories) {
  std::unordered_map<std::string, uint64_t> freq;
  for (const auto& h : histories)
    for (const auto& r : h.events) ++freq[r.item_id];
  return freq;
}

std::vector<Example> long_tail_slice(const std::vector<Example>& test_examples,
                                     const std::unordered_map<std::string, uint64_t>& catalog_frequency,
                                     double quantile) {
  if (!(quantile > 0.0) || quantile > 1.0)
    throw std::invalid_argument("long_tail_slice: quantile must be in (0, 1]");

  std::vector<std::pair<uint64_t, std::string>> ranked;
  ranked.reserve(catalog_frequency.size());
  for (const auto& [item, count] : catalog_frequency) ranked.emplace_back(count, item);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;  // ties broken by item_id ascending
  });

  size_t keep = static_cast<size_t>(std::floor(quantile * static_cast<double>(ranked.size()) + 1e-9));
  std::unordered_set<std::string> tail;
  for (size_t i = 0; i < keep && i < ranked.size(); ++i) tail.insert(ranked[i].second);

  std::vector<Example> out;
  for (const auto& ex : test_examples)
    if (tail.count(ex.target.item_id)) out.push_back(ex);
  return out;
}

// --- persistence ---

namespace {

json example_to_json(const Example& ex) {
  json prefix = json::array();
  for (const auto& r : ex.prefix) prefix.push_back({r.item_id, r.timestamp});
  return json{{"user_id", ex.user_id},
              {"prefix", prefix},
              {"target_item", ex.target.item_id},
              {"target_ts", ex.target.timestamp}};
}

Example example_from_json(const json& j) {
  Example ex;
  ex.user_id = j.at("user_id").get<std::string>();
  for (const auto& p : j.at("prefix"))
    ex.prefix.push_back({ex.user_id, p.at(0).get<std::string>(), p.at(1).get<int64_t>()});
  ex.target = {ex.user_id, j.at("target_item").get<std::string>(), j.at("target_ts").get<int64_t>()};
  return ex;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return in;
}

}  // namespace

void save_examples(const std::vector<Example>& examples, const std::string& path) {
  auto out = open_out(path);
  for (const auto& ex : examples) out << example_to_json(ex).dump() << '\n';
}

std::vector<Example> load_examples(const std::string& path) {
  auto in = open_in(path);
  std::vector<Example> out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    out.push_back(example_from_json(json::parse(line)));
  }
  return out;
}

void save_interactions(const std::vector<InteractionRecord>& records, const std::string& path) {
  auto out = open_out(path);
  for (const auto& r : records)
    out << json{{"user_id", r.user_id}, {"item_id", r.item_id}, {"timestamp", r.timestamp}}.dump()
        << '\n';
}

std::vector<InteractionRecord> load_interactions(const std::string& path) {
  auto in = open_in(path);
  std::vector<InteractionRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    json j = json::parse(line);
    out.push_back({j.at("user_id").get<std::string>(), j.at("item_id").get<std::string>(),
                   j.at("timestamp").get<int64_t>()});
  }
  return out;
}

void save_catalog(const ItemCatalog& catalog, const std::string& path) {
  auto out = open_out(path);
  for (const auto& item : catalog.items()) {
    json meta = json::array();
    for (const auto& [k, v] : item.metadata) meta.push_back({k, v});
    out << json{{"item_id", item.item_id}, {"title", item.title}, {"metadata", meta}}.dump() << '\n';
  }
}

ItemCatalog load_catalog(const std::string& path) {
  auto in = open_in(path);
  ItemCatalog catalog;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    json j = json::parse(line);
    ItemRecord rec;
    rec.item_id = j.at("item_id").get<std::string>();
    rec.title = j.at("title").get<std::string>();
    for (const auto& kv : j.at("metadata"))
      rec.metadata.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
    catalog.add(std::move(rec));
  }
  return catalog;
}

void save_frequencies(const std::unordered_map<std::string, uint64_t>& freq, const std::string& path) {
  std::vector<std::pair<std::string, uint64_t>> rows(freq.begin(), freq.end());
  std::sort(rows.begin(), rows.end());
  auto out = open_out(path);
  for (const auto& [item, count] : rows)
    out << json{{"item_id", item}, {"count", count}}.dump() << '\n';
}

std::unordered_map<std::string, uint64_t> load_frequencies(const std::string& path) {
  auto in = open_in(path);
  std::unordered_map<std::string, uint64_t> freq;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    json j = json::parse(line);
    freq[j.at("item_id").get<std::string>()] = j.at("count").get<uint64_t>();
  }
  return freq;
}

uint64_t file_digest(const std::string& path) {
  auto in = open_in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return fnv1a(buf.str());
}

void save_bundle(const SplitBundle& bundle, const SplitConfig& cfg, const std::string& dir) {
  save_examples(bundle.train, dir + "/train.jsonl");
  save_examples(bundle.validation, dir + "/validation.jsonl");
  save_examples(bundle.test, dir + "/test.jsonl");
  save_interactions(bundle.memory_pool, dir + "/memory_pool.jsonl");
  save_frequencies(bundle.catalog_frequency, dir + "/frequency.jsonl");

  json manifest{
      {"seed", bundle.seed},
      {"ratio", {cfg.ratio[0], cfg.ratio[1], cfg.ratio[2]}},
      {"requested", {{"train", cfg.n_train}, {"validation", cfg.n_val}, {"test", cfg.n_test}}},
      {"memory_cap", cfg.memory_cap},
      {"no_lookahead", cfg.no_lookahead},
      {"counts",
       {{"examples_total", bundle.counts.examples_total},
        {"train_pool", bundle.counts.train_pool},
        {"val_pool", bundle.counts.val_pool},
        {"test_pool", bundle.counts.test_pool},
        {"train", bundle.train.size()},
        {"validation", bundle.validation.size()},
        {"test", bundle.test.size()},
        {"memory_pool", bundle.memory_pool.size()}}},
      {"digests",
       {{"train", fnv_hex(file_digest(dir + "/train.jsonl"))},
        {"validation", fnv_hex(file_digest(dir + "/validation.jsonl"))},
        {"test", fnv_hex(file_digest(dir + "/test.jsonl"))},
        {"memory_pool", fnv_hex(file_digest(dir + "/memory_pool.jsonl"))},
        {"frequency", fnv_hex(file_digest(dir + "/frequency.jsonl"))}}}};
  if (bundle.earliest_test_ts) manifest["earliest_test_ts"] = *bundle.earliest_test_ts;
  auto out = open_out(dir + "/split_manifest.json");
  out << manifest.dump(2) << '\n';
}

SplitBundle load_bundle(const std::string& dir) {
  SplitBundle bundle;
  bundle.train = load_examples(dir + "/train.jsonl");
  bundle.validation = load_examples(dir + "/validation.jsonl");
  bundle.test = load_examples(dir + "/test.jsonl");
  bundle.memory_pool = load_interactions(dir + "/memory_pool.jsonl");
  bundle.catalog_frequency = load_frequencies(dir + "/frequency.jsonl");

  auto in = open_in(dir + "/split_manifest.json");
  json manifest = json::parse(in);
  bundle.seed = manifest.at("seed").get<uint64_t>();
  const auto& counts = manifest.at("counts");
  bundle.counts.examples_total = counts.at("examples_total").get<size_t>();
  bundle.counts.train_pool = counts.at("train_pool").get<size_t>();
  bundle.counts.val_pool = counts.at("val_pool").get<size_t>();
  bundle.counts.test_pool = counts.at("test_pool").get<size_t>();
  if (manifest.contains("earliest_test_ts"))
    bundle.earliest_test_ts = manifest.at("earliest_test_ts").get<int64_t>();
  return bundle;
}

}  // namespace memrank
