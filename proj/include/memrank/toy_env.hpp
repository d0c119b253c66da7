#pragma once

#include <memory>
#include <string>
#include <vector>

#include "memrank/corpus.hpp"
#include "memrank/dataset.hpp"
#include "memrank/embedding.hpp"
#include "memrank/episode.hpp"
#include "memrank/grounding.hpp"
#include "memrank/grpo.hpp"
#include "memrank/index.hpp"
#include "memrank/profile.hpp"

namespace memrank {

enum class ToyCaseKind { Direct, PlantedCollab, PlantedMeta };

std::string toy_case_kind_name(ToyCaseKind kind);

struct ToyCase {
  std::string user_id;
  std::string prompt;
  std::string gt_item;
  ToyCaseKind kind = ToyCaseKind::Direct;
};

struct ToyEnvSpec {
  size_t n_users = 100;
  size_t n_items = 50;
  double direct_fraction = 0.5;  // cases answerable from the prompt alone
  size_t state_buckets = 16384;
  // initial logits: a freshly prompted policy explores retrieval heavily and
  // trims it as the reward shapes behavior
  double retrieval_bias = 4.5;
  double think_bias = 1.0;
  double extract_bias = 1.5;
  size_t embed_dim = 256;
};

// Action vocabulary for the toy policy: a think filler, two retrieval query
// templates built from the prompt's history titles, an indexical answer that
// quotes the title found in the last tool response, and one direct answer
// per catalog title. State buckets hash the prompt's history for
// pre-retrieval states and collapse post-retrieval states by response shape,
// so "answer what you retrieved" is shared across cases.
class ToyDomain final : public ActionRealizer {
 public:
  ToyDomain(std::vector<std::string> titles, std::string entity_label, size_t state_buckets);

  size_t state_count() const override { return state_buckets_; }
  size_t action_count() const override { return kFixedActions + titles_.size(); }
  uint64_t state_key(const std::string& context) const override;
  std::string realize(size_t action, const std::string& context) const override;
  bool is_stop(size_t action) const override;

  static constexpr size_t kThink = 0;
  static constexpr size_t kToolCallCollab = 1;
  static constexpr size_t kToolCallMeta = 2;
  static constexpr size_t kAnswerFromResponse = 3;
  static constexpr size_t kFixedActions = 4;

  const std::vector<std::string>& titles() const { return titles_; }
  const std::string& entity_label() const { return entity_label_; }

  // helpers exposed for tests
  static std::vector<std::string> prompt_titles(const std::string& context);
  static std::string response_extract(const std::string& response_body);

 private:
  std::vector<std::string> titles_;
  std::string entity_label_;
  size_t state_buckets_;
};

// Synthetic world: n_items two-word titles, n_users with deterministic
// histories; direct cases have no corpus evidence while planted cases get a
// collaborative or meta document whose last element / title field is the
// ground truth. Non-copyable so the index's embedder pointer stays valid.
class ToyEnv {
 public:
  static std::unique_ptr<ToyEnv> build(const ToyEnvSpec& spec);

  ToyEnv(const ToyEnv&) = delete;
  ToyEnv& operator=(const ToyEnv&) = delete;

  TabularPolicy make_policy(double temperature, uint64_t seed) const;

  const ToyEnvSpec& spec() const { return spec_; }
  const ItemCatalog& catalog() const { return catalog_; }
  const std::vector<MemoryDocument>& docs() const { return docs_; }
  const FlatIndex& index() const { return *index_; }
  const GroundingIndex& grounding() const { return *grounding_; }
  const std::vector<ToyCase>& cases() const { return cases_; }
  std::shared_ptr<const ToyDomain> domain() const { return domain_; }

 private:
  ToyEnv() = default;

  ToyEnvSpec spec_;
  std::unique_ptr<HashEmbedder> embedder_;
  ItemCatalog catalog_;
  std::vector<MemoryDocument> docs_;
  std::unique_ptr<FlatIndex> index_;
  std::unique_ptr<GroundingIndex> grounding_;
  std::vector<ToyCase> cases_;
  std::shared_ptr<ToyDomain> domain_;
};

// G rollouts of one case with rewards and group-standardized advantages;
// episodes are seeded from rng so batches are reproducible
GroupBatch sample_group(TabularPolicy& policy, const ToyCase& c, const FlatIndex& index,
                        const GroundingIndex& grounding, const RewardConfig& reward_config,
                        const EpisodeLimits& limits, size_t group_size, double advantage_epsilon,
                        Rng& rng);

struct TrainRecord {
  size_t step = 0;
  double mean_reward = 0.0;
  double mean_kl = 0.0;
  double clip_fraction = 0.0;
  double mean_retrieval_calls = 0.0;
  double mean_generated_tokens = 0.0;
  size_t direct_episodes = 0;
  size_t direct_retrieving = 0;  // direct-case episodes that called retrieval
  size_t planted_episodes = 0;
  size_t planted_retrieving = 0;
};

struct EpisodeStat {
  size_t step = 0;
  std::string kind;
  double reward = 0.0;
  size_t retrieval_calls = 0;
  size_t generated_tokens = 0;
  bool parse_ok = false;
};

struct TrainingLog {
  std::vector<TrainRecord> records;    // one per step, step 0 = initial probe
  std::vector<EpisodeStat> episodes;   // one per rollout
  bool diverged = false;
};

// sample_group + grpo_step for config.steps updates against a frozen copy of
// the starting policy; aborts (diverged flag) if the mean reward goes
// non-finite. Step 0 records an evaluation of the initial policy without
// updating it.
TrainingLog train_toy(const ToyEnv& env, TabularPolicy& policy, const GrpoConfig& config,
                      const RewardConfig& reward_config, const EpisodeLimits& limits, uint64_t seed);

void save_training_log(const TrainingLog& log, const std::string& records_path,
                       const std::string& episodes_path);

// checkpoint: weights plus enough of the domain to rebuild the policy
void save_toy_checkpoint(const TabularPolicy& policy, const ToyDomain& domain, uint64_t config_digest,
                         const std::string& path);

struct ToyCheckpoint {
  std::shared_ptr<ToyDomain> domain;
  std::unique_ptr<TabularPolicy> policy;
  uint64_t config_digest = 0;
};

ToyCheckpoint load_toy_checkpoint(const std::string& path, double temperature, uint64_t seed);

}  // namespace memrank
