#include "memrank/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"
#include "memrank/util.hpp"

namespace memrank {

using nlohmann::json;

std::string memory_kind_name(MemoryKind kind) {
  return kind == MemoryKind::Collaborative ? "collaborative" : "meta";
}

MemoryKind memory_kind_from_name(const std::string& name) {
  if (name == "collaborative") return MemoryKind::Collaborative;
  if (name == "meta") return MemoryKind::Meta;
  throw std::invalid_argument("unknown memory kind: " + name);
}

std::string render_collab_doc(const std::string& user_id,
                              const std::vector<std::string>& history_titles) {
  if (history_titles.empty())
    throw std::invalid_argument("render_collab_doc: empty history for user " + user_id);
  std::string out = "User " + user_id + " History: [";
  for (size_t i = 0; i < history_titles.size(); ++i) {
    if (i) out += ", ";
    out += history_titles[i];
  }
  out += "]";
  return out;
}

std::string render_meta_doc(const ItemRecord& item, const std::string& entity_label,
                            const std::vector<std::pair<std::string, std::string>>& field_order) {
  std::string out = entity_label + ": " + item.title;
  for (const auto& [key, label] : field_order) {
    auto it = std::find_if(item.metadata.begin(), item.metadata.end(),
                           [&](const auto& kv) { return kv.first == key; });
    if (it == item.metadata.end()) continue;
    out += "; " + label + ": " + it->second;
  }
  return out;
}

CorpusResult build_corpus(const SplitBundle& bundle, const ItemCatalog& catalog,
                          const DatasetProfile& profile, const AblationFlags& ablation,
                          const CorpusBuildOptions& options) {
  CorpusResult result;
  if (ablation.without_cf && ablation.without_meta) {
    result.warnings = 1;
    return result;
  }

  if (!ablation.without_cf) {
    std::unordered_set<std::string> split_users;
    auto collect = [&](const std::vector<Example>& exs) {
      for (const auto& ex : exs) split_users.insert(ex.user_id);
    };
    collect(bundle.train);
    collect(bundle.validation);
    collect(bundle.test);

    // memory_pool preserves chronological order within each user
    std::map<std::string, std::vector<std::string>> titles_by_user;
    for (const auto& r : bundle.memory_pool) {
      if (split_users.count(r.user_id)) continue;
      const ItemRecord* item = catalog.find(r.item_id);
      if (!item) continue;
      titles_by_user[r.user_id].push_back(item->title);
    }
    for (auto& [user, titles] : titles_by_user) {
      if (titles.size() > options.max_history_titles)
        titles.erase(titles.begin(), titles.end() - static_cast<long>(options.max_history_titles));
      MemoryDocument doc;
      doc.doc_id = static_cast<uint32_t>(result.docs.size());
      doc.kind = MemoryKind::Collaborative;
      doc.source_ref = user;
      doc.text = render_collab_doc(user, titles);
      result.docs.push_back(std::move(doc));
    }
  }

  if (!ablation.without_meta) {
    std::vector<const ItemRecord*> items;
    items.reserve(catalog.size());
    for (const auto& item : catalog.items()) items.push_back(&item);
    std::sort(items.begin(), items.end(),
              [](const ItemRecord* a, const ItemRecord* b) { return a->item_id < b->item_id; });
    for (const ItemRecord* item : items) {
      MemoryDocument doc;
      doc.doc_id = static_cast<uint32_t>(result.docs.size());
      doc.kind = MemoryKind::Meta;
      doc.source_ref = item->item_id;
      doc.text = render_meta_doc(*item, profile.entity_label, profile.meta_fields);
      result.docs.push_back(std::move(doc));
    }
  }
  return result;
}

uint64_t corpus_digest(const std::vector<MemoryDocument>& docs) {
  uint64_t h = fnv1a("corpus");
  for (const auto& doc : docs) {
    h = fnv1a_u64(doc.doc_id, h);
    h = fnv1a(memory_kind_name(doc.kind), h);
    h = fnv1a(doc.source_ref, h);
    h = fnv1a(doc.text, h);
  }
  return h;
}

void save_corpus(const std::vector<MemoryDocument>& docs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& doc : docs)
    out << json{{"doc_id", doc.doc_id},
                {"kind", memory_kind_name(doc.kind)},
                {"source_ref", doc.source_ref},
                {"text", doc.text}}
               .dump()
        << '\n';
}

std::vector<MemoryDocument> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<MemoryDocument> docs;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    json j = json::parse(line);
    MemoryDocument doc;
    doc.doc_id = j.at("doc_id").get<uint32_t>();
    doc.kind = memory_kind_from_name(j.at("kind").get<std::string>());
    doc.source_ref = j.at("source_ref").get<std::string>();
    doc.text = j.at("text").get<std::string>();
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace memrank
