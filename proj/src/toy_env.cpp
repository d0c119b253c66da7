#include "memrank/toy_env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "memrank/util.hpp"

namespace memrank {

using nlohmann::json;

std::string toy_case_kind_name(ToyCaseKind kind) {
  switch (kind) {
    case ToyCaseKind::Direct: return "direct";
    case ToyCaseKind::PlantedCollab: return "planted_collab";
    case ToyCaseKind::PlantedMeta: return "planted_meta";
  }
  return "direct";
}

ToyDomain::ToyDomain(std::vector<std::string> titles, std::string entity_label, size_t state_buckets)
    : titles_(std::move(titles)), entity_label_(std::move(entity_label)),
      state_buckets_(state_buckets) {
  if (titles_.empty()) throw std::invalid_argument("ToyDomain: no titles");
  if (state_buckets_ == 0) throw std::invalid_argument("ToyDomain: no state buckets");
}

std::vector<std::string> ToyDomain::prompt_titles(const std::string& context) {
  std::vector<std::string> out;
  size_t marker = context.find("before: ");
  if (marker == std::string::npos) return out;
  size_t end = context.find('\n', marker);
  if (end == std::string::npos) end = context.size();
  size_t pos = marker;
  while (pos < end) {
    size_t open = context.find('"', pos);
    if (open == std::string::npos || open >= end) break;
    size_t close = context.find('"', open + 1);
    if (close == std::string::npos || close >= end) break;
    out.push_back(context.substr(open + 1, close - open - 1));
    pos = close + 1;
  }
  return out;
}

std::string ToyDomain::response_extract(const std::string& body) {
  size_t hist = body.find("History: [");
  if (hist != std::string::npos) {
    size_t open = hist + std::string("History: [").size() - 1;
    size_t close = body.find(']', open);
    if (close == std::string::npos) return "";
    auto parts = split(std::string_view(body).substr(open + 1, close - open - 1), ',');
    if (parts.empty()) return "";
    return trim(parts.back());
  }
  size_t colon = body.find(": ");
  if (colon != std::string::npos) {
    std::string rest = body.substr(colon + 2);
    size_t semi = rest.find(';');
    if (semi != std::string::npos) rest.resize(semi);
    return trim(rest);
  }
  return "";
}

namespace {

size_t count_occurrences(const std::string& s, std::string_view needle) {
  size_t count = 0, pos = 0;
  while ((pos = s.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

// the instruction prompt itself mentions the tool-response tag once; a real
// injected passage adds further occurrences
bool has_injected_response(const std::string& context) {
  return count_occurrences(context, "<tool_response>") >= 2;
}

std::string last_tool_response_body(const std::string& context) {
  size_t open = context.rfind("<tool_response>");
  if (open == std::string::npos) return "";
  size_t begin = open + std::string("<tool_response>").size();
  size_t close = context.find("</tool_response>", begin);
  if (close == std::string::npos) close = context.size();
  return trim(std::string_view(context).substr(begin, close - begin));
}

}  // namespace

uint64_t ToyDomain::state_key(const std::string& context) const {
  if (has_injected_response(context)) {
    const std::string body = last_tool_response_body(context);
    const char* shape = "blank";
    if (body.find("History: [") != std::string::npos)
      shape = "collab";
    else if (body.find(": ") != std::string::npos)
      shape = "meta";
    return fnv1a(shape, fnv1a("resp|")) % state_buckets_;
  }
  const auto titles = prompt_titles(context);
  uint64_t h = fnv1a("prompt|");
  for (const auto& t : titles) {
    h = fnv1a(t, h);
    h = fnv1a("\x1f", h);
  }
  return h % state_buckets_;
}

std::string ToyDomain::realize(size_t action, const std::string& context) const {
  if (action == kThink)
    return "<think> the listed history suggests a familiar pattern, weighing whether more evidence is needed </think>";
  if (action == kToolCallCollab || action == kToolCallMeta) {
    auto titles = prompt_titles(context);
    const std::string joined = join(titles, ", ");
    if (action == kToolCallCollab)
      return "<tool_call> histories of users who liked " + joined + " </tool_call>";
    return "<tool_call> metadata for items related to " + joined + " </tool_call>";
  }
  if (action == kAnswerFromResponse) {
    const std::string found =
        has_injected_response(context) ? response_extract(last_tool_response_body(context)) : "";
    return "<answer> \"" + found + "\" </answer>";
  }
  const size_t title_idx = action - kFixedActions;
  if (title_idx >= titles_.size()) throw std::out_of_range("ToyDomain: bad action id");
  return "<answer> \"" + titles_[title_idx] + "\" </answer>";
}

bool ToyDomain::is_stop(size_t action) const { return action != kThink; }

namespace {

constexpr const char* kAdjectives[10] = {"Crimson", "Silent",   "Golden", "Wandering", "Frozen",
                                         "Electric", "Hollow",  "Radiant", "Shattered", "Emerald"};
constexpr const char* kNouns[10] = {"Harbor",  "Meridian", "Orchard", "Citadel", "Lantern",
                                    "Compass", "Archive",  "Summit",  "Garden",  "Beacon"};

std::string toy_title(size_t i) {
  const size_t a = i % 10;
  const size_t n = (i / 10 + a) % 10;
  std::string t = std::string(kAdjectives[a]) + " " + kNouns[n];
  if (i >= 100) t += " " + std::to_string(i / 100 + 1);
  return t;
}

}  // namespace

std::unique_ptr<ToyEnv> ToyEnv::build(const ToyEnvSpec& spec) {
  if (spec.n_items == 0 || spec.n_users == 0) throw std::invalid_argument("ToyEnv: empty spec");

  std::unique_ptr<ToyEnv> env(new ToyEnv());
  env->spec_ = spec;
  env->embedder_ = std::make_unique<HashEmbedder>(spec.embed_dim);

  std::vector<std::string> titles(spec.n_items);
  for (size_t i = 0; i < spec.n_items; ++i) {
    titles[i] = toy_title(i);
    std::string id = "it" + std::string(i < 10 ? "00" : i < 100 ? "0" : "") + std::to_string(i);
    env->catalog_.add(ItemRecord{id, titles[i], {}});
  }

  const DatasetProfile profile = builtin_profile("generic");
  const size_t direct_quota =
      static_cast<size_t>(std::llround(spec.direct_fraction * static_cast<double>(spec.n_users)));

  std::vector<MemoryDocument> collab_docs, meta_docs;
  size_t planted_assigned = 0;
  for (size_t u = 0; u < spec.n_users; ++u) {
    // histories are distinct: same-half users differ in their first title,
    // the longer half differs from the shorter by length
    const size_t hist_len = 3 + (u >= spec.n_users / 2 ? 1 : 0);
    std::vector<size_t> hist_idx;
    std::vector<std::string> hist_titles;
    for (size_t j = 0; j < hist_len; ++j) {
      size_t idx = (u + 17 * j) % spec.n_items;
      hist_idx.push_back(idx);
      hist_titles.push_back(titles[idx]);
    }
    size_t gt = (u * 7 + 3) % spec.n_items;
    while (std::find(hist_idx.begin(), hist_idx.end(), gt) != hist_idx.end())
      gt = (gt + 1) % spec.n_items;

    ToyCase c;
    c.user_id = "u" + std::to_string(u);
    c.gt_item = env->catalog_.items()[gt].item_id;
    // Bresenham spread of direct cases across the user range
    const bool is_direct = (u + 1) * direct_quota / spec.n_users > u * direct_quota / spec.n_users;
    if (is_direct) {
      c.kind = ToyCaseKind::Direct;
    } else {
      c.kind = (planted_assigned++ % 2 == 0) ? ToyCaseKind::PlantedCollab : ToyCaseKind::PlantedMeta;
    }
    c.prompt = render_prompt(hist_titles, profile, AblationFlags{});

    if (c.kind == ToyCaseKind::PlantedCollab) {
      std::vector<std::string> doc_titles = hist_titles;
      doc_titles.push_back(titles[gt]);
      MemoryDocument doc;
      doc.kind = MemoryKind::Collaborative;
      doc.source_ref = "h" + std::to_string(700 + u);
      doc.text = render_collab_doc(doc.source_ref, doc_titles);
      collab_docs.push_back(std::move(doc));
    } else if (c.kind == ToyCaseKind::PlantedMeta) {
      ItemRecord planted{c.gt_item, titles[gt],
                         {{"fans", "fans of " + join(hist_titles, ", ")}}};
      MemoryDocument doc;
      doc.kind = MemoryKind::Meta;
      doc.source_ref = c.gt_item;
      doc.text = render_meta_doc(planted, "Item Name", {{"fans", "Fans"}});
      meta_docs.push_back(std::move(doc));
    }
    env->cases_.push_back(std::move(c));
  }

  for (auto& d : collab_docs) {
    d.doc_id = static_cast<uint32_t>(env->docs_.size());
    env->docs_.push_back(std::move(d));
  }
  for (auto& d : meta_docs) {
    d.doc_id = static_cast<uint32_t>(env->docs_.size());
    env->docs_.push_back(std::move(d));
  }

  env->index_ = std::make_unique<FlatIndex>(FlatIndex::build(env->docs_, *env->embedder_));
  env->grounding_ = std::make_unique<GroundingIndex>(env->catalog_, *env->embedder_);
  env->domain_ = std::make_shared<ToyDomain>(titles, "Item Name", spec.state_buckets);
  return env;
}

TabularPolicy ToyEnv::make_policy(double temperature, uint64_t seed) const {
  TabularPolicy policy(domain_, temperature, seed);
  auto& w = policy.weights();
  const size_t actions = domain_->action_count();
  for (size_t s = 0; s < domain_->state_count(); ++s) {
    w[s * actions + ToyDomain::kThink] = spec_.think_bias;
    w[s * actions + ToyDomain::kToolCallCollab] = spec_.retrieval_bias;
    w[s * actions + ToyDomain::kToolCallMeta] = spec_.retrieval_bias;
    w[s * actions + ToyDomain::kAnswerFromResponse] = spec_.extract_bias;
  }
  return policy;
}

GroupBatch sample_group(TabularPolicy& policy, const ToyCase& c, const FlatIndex& index,
                        const GroundingIndex& grounding, const RewardConfig& reward_config,
                        const EpisodeLimits& limits, size_t group_size, double advantage_epsilon,
                        Rng& rng) {
  if (group_size < 2) throw std::invalid_argument("sample_group: group size must be >= 2");
  GroupBatch batch;
  batch.case_id = c.user_id;
  batch.trajectories.reserve(group_size);
  batch.rewards.reserve(group_size);
  for (size_t g = 0; g < group_size; ++g) {
    policy.seed_episode(rng.next());
    Trajectory traj = run_episode(policy, index, c.prompt, limits);
    CandidateList cands =
        traj.parse_ok ? grounding.ground(traj.answer_text, reward_config.candidate_n)
                      : CandidateList{};
    RewardBreakdown rb = reward(cands, c.gt_item, traj.parse_ok, reward_config);
    batch.trajectories.push_back(std::move(traj));
    batch.rewards.push_back(rb.total);
  }
  batch.advantages = group_advantages(batch.rewards, advantage_epsilon);
  return batch;
}

namespace {

TrainRecord summarize_step(size_t step, const std::vector<GroupBatch>& batches,
                           const std::vector<const ToyCase*>& cases, const StepStats& stats,
                           std::vector<EpisodeStat>* episodes) {
  TrainRecord rec;
  rec.step = step;
  rec.mean_reward = stats.mean_reward;
  rec.mean_kl = stats.mean_kl;
  rec.clip_fraction = stats.clip_fraction;
  size_t n = 0;
  double calls = 0.0, tokens = 0.0;
  for (size_t b = 0; b < batches.size(); ++b) {
    for (size_t i = 0; i < batches[b].trajectories.size(); ++i) {
      const Trajectory& t = batches[b].trajectories[i];
      ++n;
      calls += static_cast<double>(t.retrieval_calls);
      tokens += static_cast<double>(t.generated_tokens);
      const bool retrieved = t.retrieval_calls > 0;
      if (cases[b]->kind == ToyCaseKind::Direct) {
        ++rec.direct_episodes;
        rec.direct_retrieving += retrieved ? 1 : 0;
      } else {
        ++rec.planted_episodes;
        rec.planted_retrieving += retrieved ? 1 : 0;
      }
      if (episodes) {
        episodes->push_back(EpisodeStat{step, toy_case_kind_name(cases[b]->kind),
                                        batches[b].rewards[i], t.retrieval_calls,
                                        t.generated_tokens, t.parse_ok});
      }
    }
  }
  if (n > 0) {
    rec.mean_retrieval_calls = calls / static_cast<double>(n);
    rec.mean_generated_tokens = tokens / static_cast<double>(n);
  }
  return rec;
}

}  // namespace

TrainingLog train_toy(const ToyEnv& env, TabularPolicy& policy, const GrpoConfig& config,
                      const RewardConfig& reward_config, const EpisodeLimits& limits, uint64_t seed) {
  config.validate();
  reward_config.validate();

  TrainingLog log;
  const TabularPolicy ref = policy;  // frozen reference for the KL term
  Rng root(fnv1a_u64(seed, fnv1a("train_toy")));
  const auto& cases = env.cases();

  auto roll_batches = [&](Rng& rng, std::vector<const ToyCase*>& picked) {
    std::vector<GroupBatch> batches;
    batches.reserve(config.prompts_per_step);
    for (size_t b = 0; b < config.prompts_per_step; ++b) {
      const ToyCase& c = cases[rng.below(cases.size())];
      picked.push_back(&c);
      batches.push_back(sample_group(policy, c, env.index(), env.grounding(), reward_config, limits,
                                     config.group_size, config.advantage_epsilon, rng));
    }
    return batches;
  };

  {
    // initial evaluation, no update
    Rng rng = root.fork(0);
    std::vector<const ToyCase*> picked;
    auto batches = roll_batches(rng, picked);
    StepStats stats;
    double reward_sum = 0.0;
    size_t n = 0;
    for (const auto& b : batches)
      for (double r : b.rewards) {
        reward_sum += r;
        ++n;
      }
    stats.mean_reward = n ? reward_sum / static_cast<double>(n) : 0.0;
    log.records.push_back(summarize_step(0, batches, picked, stats, &log.episodes));
  }

  for (size_t step = 1; step <= config.steps; ++step) {
    Rng rng = root.fork(step);
    std::vector<const ToyCase*> picked;
    auto batches = roll_batches(rng, picked);
    StepStats stats = grpo_step(policy, ref, batches, config);
    log.records.push_back(summarize_step(step, batches, picked, stats, &log.episodes));
    if (!std::isfinite(log.records.back().mean_reward)) {
      log.diverged = true;
      break;
    }
  }
  return log;
}

void save_training_log(const TrainingLog& log, const std::string& records_path,
                       const std::string& episodes_path) {
  std::ofstream rec(records_path);
  if (!rec) throw std::runtime_error("cannot write " + records_path);
  for (const auto& r : log.records) {
    rec << json{{"step", r.step},
                {"mean_reward", r.mean_reward},
                {"mean_kl", r.mean_kl},
                {"clip_fraction", r.clip_fraction},
                {"mean_retrieval_calls", r.mean_retrieval_calls},
                {"mean_generated_tokens", r.mean_generated_tokens},
                {"direct_episodes", r.direct_episodes},
                {"direct_retrieving", r.direct_retrieving},
                {"planted_episodes", r.planted_episodes},
                {"planted_retrieving", r.planted_retrieving}}
               .dump()
        << '\n';
  }
  std::ofstream ep(episodes_path);
  if (!ep) throw std::runtime_error("cannot write " + episodes_path);
  for (const auto& e : log.episodes) {
    ep << json{{"step", e.step},
               {"kind", e.kind},
               {"reward", e.reward},
               {"retrieval_calls", e.retrieval_calls},
               {"generated_tokens", e.generated_tokens},
               {"parse_ok", e.parse_ok}}
              .dump()
       << '\n';
  }
}

void save_toy_checkpoint(const TabularPolicy& policy, const ToyDomain& domain, uint64_t config_digest,
                         const std::string& path) {
  json j{{"state_buckets", domain.state_count()},
         {"entity_label", domain.entity_label()},
         {"titles", domain.titles()},
         {"temperature", policy.temperature()},
         {"config_digest", fnv_hex(config_digest)},
         {"weights", policy.weights()}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump() << '\n';
}

ToyCheckpoint load_toy_checkpoint(const std::string& path, double temperature, uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  json j = json::parse(in);
  ToyCheckpoint ckpt;
  ckpt.domain = std::make_shared<ToyDomain>(j.at("titles").get<std::vector<std::string>>(),
                                            j.at("entity_label").get<std::string>(),
                                            j.at("state_buckets").get<size_t>());
  ckpt.policy = std::make_unique<TabularPolicy>(ckpt.domain, temperature, seed);
  auto weights = j.at("weights").get<std::vector<double>>();
  if (weights.size() != ckpt.policy->weights().size())
    throw std::runtime_error("toy checkpoint: weight shape mismatch");
  ckpt.policy->weights() = std::move(weights);
  ckpt.config_digest = std::stoull(j.at("config_digest").get<std::string>(), nullptr, 16);
  return ckpt;
}

}  // namespace memrank
