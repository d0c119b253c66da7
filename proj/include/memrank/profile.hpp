#pragma once

#include <string>
#include <utility>
#include <vector>

namespace memrank {

// corpus/prompt ablation switches; recorded in every run manifest
struct AblationFlags {
  bool without_cf = false;
  bool without_meta = false;
  bool without_re = false;
};

// Dataset-specific wording: entity label for metadata passages, the nouns and
// verbs used by the prompt template, and the metadata field order
// (raw catalog key -> display label).
struct DatasetProfile {
  std::string name;
  std::string entity_label;      // "Movie Name", "Book Name", ...
  std::string item_noun;         // "movie"
  std::string item_noun_plural;  // "movies"
  std::string consume_verb_past; // "watched"
  std::string history_label;     // "viewing" as in "the user's viewing history"
  std::vector<std::pair<std::string, std::string>> meta_fields;
  std::vector<std::string> prompt_meta_labels;  // labels named in the prompt
};

// profiles for the three stock datasets plus a generic "items" profile;
// throws std::invalid_argument on an unknown name
DatasetProfile builtin_profile(const std::string& name);

}  // namespace memrank
