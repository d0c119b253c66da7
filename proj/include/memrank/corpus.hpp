#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memrank/dataset.hpp"
#include "memrank/profile.hpp"

namespace memrank {

enum class MemoryKind { Collaborative, Meta };

std::string memory_kind_name(MemoryKind kind);
MemoryKind memory_kind_from_name(const std::string& name);

struct MemoryDocument {
  uint32_t doc_id = 0;  // dense from 0, collaborative block first
  MemoryKind kind = MemoryKind::Collaborative;
  std::string source_ref;  // user_id for collaborative docs, item_id for meta docs
  std::string text;
};

// "User <id> History: [<t1>, <t2>, ...]"; throws on an empty title list
std::string render_collab_doc(const std::string& user_id,
                              const std::vector<std::string>& history_titles);

// "<EntityLabel>: <title>; <Field>: <value>; ..." in field_order
// (raw key -> display label); fields missing from the item are omitted
std::string render_meta_doc(const ItemRecord& item, const std::string& entity_label,
                            const std::vector<std::pair<std::string, std::string>>& field_order);

struct CorpusBuildOptions {
  // collaborative passages keep only the most recent titles to bound length
  size_t max_history_titles = 50;
};

struct CorpusResult {
  std::vector<MemoryDocument> docs;
  size_t warnings = 0;  // 1 when both memory kinds are ablated away
};

// One collaborative document per memory-pool user (skipping any user that
// appears in a split example) plus one meta document per catalog item,
// subject to the ablation flags. Collaborative docs come first, each block
// ascending by source_ref.
CorpusResult build_corpus(const SplitBundle& bundle, const ItemCatalog& catalog,
                          const DatasetProfile& profile, const AblationFlags& ablation,
                          const CorpusBuildOptions& options = {});

uint64_t corpus_digest(const std::vector<MemoryDocument>& docs);

void save_corpus(const std::vector<MemoryDocument>& docs, const std::string& path);
std::vector<MemoryDocument> load_corpus(const std::string& path);

}  // namespace memrank
