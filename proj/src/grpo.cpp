#include "memrank/grpo.hpp"

#include <algorithm>
#include <cmath>

#include "memrank/util.hpp"

namespace memrank {

void GrpoConfig::validate() const {
  if (group_size < 2) throw std::invalid_argument("grpo config: group_size must be >= 2");
  if (!(clip > 0.0) || clip >= 1.0) throw std::invalid_argument("grpo config: clip must be in (0, 1)");
  if (kl_coeff < 0.0) throw std::invalid_argument("grpo config: kl_coeff must be >= 0");
  if (temperature < 0.0) throw std::invalid_argument("grpo config: temperature must be >= 0");
  if (!(advantage_epsilon > 0.0))
    throw std::invalid_argument("grpo config: advantage_epsilon must be positive");
  if (prompts_per_step == 0) throw std::invalid_argument("grpo config: prompts_per_step must be >= 1");
}

std::vector<double> group_advantages(const std::vector<double>& rewards, double advantage_epsilon) {
  const size_t g = rewards.size();
  if (g == 0) return {};
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(g);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(g);  // population variance
  const double denom = std::max(std::sqrt(var), advantage_epsilon);
  std::vector<double> adv(g);
  for (size_t i = 0; i < g; ++i) adv[i] = (rewards[i] - mean) / denom;
  return adv;
}

double token_surrogate(double ratio, double advantage, double clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return std::min(ratio * advantage, clipped * advantage);
}

double kl_token(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_token: dimension mismatch");
  double kl = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0)
      throw GrpoError("kl_token: reference lacks support at category " + std::to_string(i));
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(kl, 0.0);
}

TabularPolicy::TabularPolicy(size_t state_count, size_t action_count, double temperature)
    : states_(state_count), actions_(action_count), w_(state_count * action_count, 0.0),
      temperature_(temperature) {}

TabularPolicy::TabularPolicy(std::shared_ptr<const ActionRealizer> realizer, double temperature,
                             uint64_t seed)
    : realizer_(std::move(realizer)), states_(realizer_->state_count()),
      actions_(realizer_->action_count()), w_(states_ * actions_, 0.0), temperature_(temperature),
      rng_(seed) {}

std::vector<double> TabularPolicy::distribution(uint64_t state) const {
  const double* row = w_.data() + (state % states_) * actions_;
  std::vector<double> p(actions_, 0.0);
  if (temperature_ == 0.0) {
    // greedy: point mass on the first argmax
    size_t best = 0;
    for (size_t a = 1; a < actions_; ++a)
      if (row[a] > row[best]) best = a;
    p[best] = 1.0;
    return p;
  }
  double maxw = row[0];
  for (size_t a = 1; a < actions_; ++a) maxw = std::max(maxw, row[a]);
  double z = 0.0;
  for (size_t a = 0; a < actions_; ++a) {
    p[a] = std::exp((row[a] - maxw) / temperature_);
    z += p[a];
  }
  for (double& x : p) x /= z;
  return p;
}

double TabularPolicy::logprob(uint64_t state, size_t action) const {
  auto p = distribution(state);
  return std::log(std::max(p[action], 1e-300));
}

Emission TabularPolicy::generate(const std::string& context, size_t max_tokens) {
  if (!realizer_) throw std::logic_error("TabularPolicy: scoring-only policy cannot generate");

  Emission out;
  std::string running = context;
  for (size_t step = 0; step < max_decisions_per_emission_; ++step) {
    const uint64_t state = realizer_->state_key(running);
    const auto dist = distribution(state);

    size_t action = dist.size() - 1;
    double u = rng_.uniform();
    double cum = 0.0;
    for (size_t a = 0; a < dist.size(); ++a) {
      cum += dist[a];
      if (u < cum) {
        action = a;
        break;
      }
    }

    const std::string chunk = realizer_->realize(action, running);
    const size_t chunk_tokens = token_count(chunk);
    const size_t used = out.token_logprobs.size();
    if (used + chunk_tokens > max_tokens && used > 0) break;

    Decision d;
    d.token_index = used;
    d.state_key = state;
    d.action_id = static_cast<uint32_t>(action);
    d.logprob = temperature_ == 0.0 ? 0.0 : std::log(std::max(dist[action], 1e-300));
    out.decisions.push_back(d);

    if (!out.text.empty()) {
      out.text += '\n';
      running += '\n';
    } else if (!running.empty() && !ends_with_ws(running)) {
      running += '\n';
    }
    out.text += chunk;
    running += chunk;
    out.token_logprobs.push_back(d.logprob);
    for (size_t i = 1; i < chunk_tokens; ++i) out.token_logprobs.push_back(0.0);

    if (realizer_->is_stop(action) || out.token_logprobs.size() >= max_tokens) break;
  }
  return out;
}

namespace {

struct LossAccumulator {
  double loss = 0.0;
  std::vector<double>* grad = nullptr;
  const TabularPolicy* policy = nullptr;
  const TabularPolicy* ref = nullptr;
  const GrpoConfig* cfg = nullptr;
  double kl_sum = 0.0;
  size_t decision_count = 0;
  size_t clipped = 0;

  // contribution of one trajectory, scaled by `scale` = 1 / (B * G)
  void add_trajectory(const Trajectory& traj, double advantage, double scale) {
    const size_t y = traj.generated_tokens;
    if (y == 0) return;
    const double token_scale = scale / static_cast<double>(y);

    // forced continuation tokens: ratio exactly 1, zero KL
    loss += token_scale * advantage * static_cast<double>(y - traj.decisions.size());

    const size_t actions = policy->action_count();
    const double tau = policy->temperature() == 0.0 ? 1.0 : policy->temperature();
    for (const Decision& d : traj.decisions) {
      const auto p = policy->distribution(d.state_key);
      const auto q = ref->distribution(d.state_key);
      const double new_lp = std::log(std::max(p[d.action_id], 1e-300));
      const double ratio = std::exp(new_lp - d.logprob);
      const double kl = kl_token(p, q);

      const bool clip_active = ratio * advantage > std::clamp(ratio, 1.0 - cfg->clip, 1.0 + cfg->clip) * advantage;
      const double surr = token_surrogate(ratio, advantage, cfg->clip);
      loss += token_scale * (surr - cfg->kl_coeff * kl);
      kl_sum += kl;
      ++decision_count;
      if (std::abs(ratio - 1.0) > cfg->clip) ++clipped;

      if (!grad) continue;
      double* grow = grad->data() + (d.state_key % policy->state_count()) * actions;

      // d surr / d w[b]: zero when the clipped branch is active and the
      // ratio sits outside the clip interval
      double dsurr_dratio;
      if (!clip_active) {
        dsurr_dratio = advantage;
      } else {
        const bool inside = ratio >= 1.0 - cfg->clip && ratio <= 1.0 + cfg->clip;
        dsurr_dratio = inside ? advantage : 0.0;
      }
      // d ratio / d w[b] = ratio * (1[b = a] - p_b) / tau
      if (dsurr_dratio != 0.0) {
        const double c = token_scale * dsurr_dratio * ratio / tau;
        for (size_t b = 0; b < actions; ++b) grow[b] -= c * p[b];
        grow[d.action_id] += c;
      }
      // d KL / d w[b] = p_b * (log(p_b / q_b) - KL) / tau
      const double kc = token_scale * cfg->kl_coeff / tau;
      for (size_t b = 0; b < actions; ++b) {
        if (p[b] <= 0.0) continue;
        grow[b] -= kc * p[b] * (std::log(p[b] / q[b]) - kl);
      }
    }
  }
};

}  // namespace

static double run_accumulator(const TabularPolicy& policy, const TabularPolicy& ref,
                              const std::vector<GroupBatch>& batches, const GrpoConfig& cfg,
                              std::vector<double>* grad, StepStats* stats) {
  cfg.validate();
  LossAccumulator acc;
  acc.grad = grad;
  acc.policy = &policy;
  acc.ref = &ref;
  acc.cfg = &cfg;

  double reward_sum = 0.0;
  size_t reward_count = 0;
  const double batch_scale = batches.empty() ? 0.0 : 1.0 / static_cast<double>(batches.size());
  for (const auto& batch : batches) {
    if (batch.trajectories.size() != batch.advantages.size())
      throw std::invalid_argument("grpo: trajectories and advantages misaligned");
    const double scale =
        batch_scale / static_cast<double>(std::max<size_t>(batch.trajectories.size(), 1));
    for (size_t i = 0; i < batch.trajectories.size(); ++i)
      acc.add_trajectory(batch.trajectories[i], batch.advantages[i], scale);
    for (double r : batch.rewards) {
      reward_sum += r;
      ++reward_count;
    }
  }

  if (stats) {
    stats->mean_reward = reward_count ? reward_sum / static_cast<double>(reward_count) : 0.0;
    stats->mean_kl = acc.decision_count ? acc.kl_sum / static_cast<double>(acc.decision_count) : 0.0;
    stats->clip_fraction =
        acc.decision_count ? static_cast<double>(acc.clipped) / static_cast<double>(acc.decision_count)
                           : 0.0;
    stats->decision_count = acc.decision_count;
  }
  return acc.loss;
}

double grpo_loss(const TabularPolicy& policy, const TabularPolicy& ref,
                 const std::vector<GroupBatch>& batches, const GrpoConfig& config) {
  return run_accumulator(policy, ref, batches, config, nullptr, nullptr);
}

std::vector<double> grpo_gradient(const TabularPolicy& policy, const TabularPolicy& ref,
                                  const std::vector<GroupBatch>& batches, const GrpoConfig& config,
                                  StepStats* stats) {
  std::vector<double> grad(policy.weights().size(), 0.0);
  run_accumulator(policy, ref, batches, config, &grad, stats);
  return grad;
}

StepStats grpo_step(TabularPolicy& policy, const TabularPolicy& ref,
                    const std::vector<GroupBatch>& batches, const GrpoConfig& config) {
  StepStats stats;
  std::vector<double> grad = grpo_gradient(policy, ref, batches, config, &stats);
  double norm2 = 0.0;
  for (double g : grad) norm2 += g * g;
  if (!std::isfinite(norm2))
    throw GrpoError("grpo_step: non-finite gradient (decisions=" +
                    std::to_string(stats.decision_count) + ", mean_kl=" +
                    std::to_string(stats.mean_kl) + "); step rejected");
  stats.grad_norm = std::sqrt(norm2);
  auto& w = policy.weights();
  for (size_t i = 0; i < w.size(); ++i) w[i] += config.learning_rate * grad[i];
  return stats;
}

}  // namespace memrank
