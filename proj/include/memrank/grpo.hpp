#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "memrank/episode.hpp"
#include "memrank/rng.hpp"

namespace memrank {

struct GrpoConfig {
  size_t group_size = 8;
  double clip = 0.2;
  double kl_coeff = 0.001;
  double temperature = 1.0;
  double advantage_epsilon = 1e-8;  // floor on the group reward std
  // the loss is a per-token mean averaged over batches, so sensible rates
  // for the tabular policy sit far above neural-net convention
  double learning_rate = 40.0;
  size_t steps = 2000;
  size_t prompts_per_step = 8;  // group batches folded into one update

  void validate() const;  // throws std::invalid_argument
};

// A_i = (R_i - mean) / max(population std, advantage_epsilon)
std::vector<double> group_advantages(const std::vector<double>& rewards, double advantage_epsilon);

// min(ratio * A, clip(ratio, 1-eps, 1+eps) * A)
double token_surrogate(double ratio, double advantage, double clip);

// exact categorical KL(p || q); throws when q lacks support somewhere p > 0
double kl_token(const std::vector<double>& p, const std::vector<double>& q);

// Maps an action id to protocol text and a context to a state bucket; the
// tabular policy samples from a softmax row per bucket. Implementations live
// with the environment that defines the action vocabulary.
class ActionRealizer {
 public:
  virtual ~ActionRealizer() = default;
  virtual size_t state_count() const = 0;
  virtual size_t action_count() const = 0;
  virtual uint64_t state_key(const std::string& context) const = 0;
  virtual std::string realize(size_t action, const std::string& context) const = 0;
  // stop actions close the emission (tool call or answer)
  virtual bool is_stop(size_t action) const = 0;
};

// Tabular softmax policy over a templated action vocabulary. Each sampled
// action contributes one decision: its log-prob sits on the first whitespace
// token of the realized text and the forced continuation tokens carry
// log-prob 0. Copyable; copies share the realizer.
class TabularPolicy final : public Policy {
 public:
  // scoring-only table (no generation)
  TabularPolicy(size_t state_count, size_t action_count, double temperature);
  TabularPolicy(std::shared_ptr<const ActionRealizer> realizer, double temperature, uint64_t seed);

  Emission generate(const std::string& context, size_t max_tokens) override;

  std::vector<double> distribution(uint64_t state) const;  // softmax(w[state] / temperature)
  double logprob(uint64_t state, size_t action) const;

  std::vector<double>& weights() { return w_; }
  const std::vector<double>& weights() const { return w_; }
  size_t state_count() const { return states_; }
  size_t action_count() const { return actions_; }
  double temperature() const { return temperature_; }
  void set_temperature(double t) { temperature_ = t; }
  void seed_episode(uint64_t seed) { rng_ = Rng(seed); }
  const ActionRealizer* realizer() const { return realizer_.get(); }

 private:
  std::shared_ptr<const ActionRealizer> realizer_;
  size_t states_ = 0;
  size_t actions_ = 0;
  std::vector<double> w_;  // states_ x actions_
  double temperature_ = 1.0;
  Rng rng_{0};
  size_t max_decisions_per_emission_ = 32;
};

struct GroupBatch {
  std::string case_id;
  std::vector<Trajectory> trajectories;
  std::vector<double> rewards;
  std::vector<double> advantages;
};

struct StepStats {
  double mean_reward = 0.0;
  double mean_kl = 0.0;
  double clip_fraction = 0.0;  // decision tokens with |ratio - 1| > clip
  double grad_norm = 0.0;
  size_t decision_count = 0;
};

class GrpoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Token-level objective: per trajectory the token mean of
// surrogate - kl_coeff * KL, averaged over the group and over batches.
// Environment tokens are excluded; non-decision policy tokens are forced
// continuations with ratio 1 and zero KL.
double grpo_loss(const TabularPolicy& policy, const TabularPolicy& ref,
                 const std::vector<GroupBatch>& batches, const GrpoConfig& config);

// dense d(loss)/d(weights); fills stats when given
std::vector<double> grpo_gradient(const TabularPolicy& policy, const TabularPolicy& ref,
                                  const std::vector<GroupBatch>& batches, const GrpoConfig& config,
                                  StepStats* stats = nullptr);

// one ascent step; throws GrpoError (policy untouched) on a non-finite gradient
StepStats grpo_step(TabularPolicy& policy, const TabularPolicy& ref,
                    const std::vector<GroupBatch>& batches, const GrpoConfig& config);

}  // namespace memrank
