#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "memrank/grpo.hpp"
#include "memrank/rng.hpp"

using namespace memrank;

namespace {

// synthetic rollout batches against a known "old" policy, no episodes needed
std::vector<GroupBatch> random_batches(const TabularPolicy& old_policy, size_t n_batches,
                                       size_t group, Rng& rng) {
  std::vector<GroupBatch> batches;
  for (size_t b = 0; b < n_batches; ++b) {
    GroupBatch batch;
    batch.case_id = "case" + std::to_string(b);
    for (size_t i = 0; i < group; ++i) {
      Trajectory traj;
      size_t decisions = 1 + rng.below(4);
      traj.generated_tokens = decisions + rng.below(8);
      for (size_t d = 0; d < decisions; ++d) {
        Decision dec;
        dec.state_key = rng.below(old_policy.state_count());
        dec.action_id = static_cast<uint32_t>(rng.below(old_policy.action_count()));
        dec.logprob = old_policy.logprob(dec.state_key, dec.action_id);
        dec.token_index = d;
        traj.decisions.push_back(dec);
      }
      batch.trajectories.push_back(std::move(traj));
      batch.rewards.push_back(rng.uniform() * 2.0 - 1.0);
    }
    batch.advantages = group_advantages(batch.rewards, 1e-8);
    batches.push_back(std::move(batch));
  }
  return batches;
}

TabularPolicy random_policy(size_t states, size_t actions, double scale, Rng& rng) {
  TabularPolicy p(states, actions, 1.0);
  for (double& w : p.weights()) w = scale * (rng.uniform() * 2.0 - 1.0);
  return p;
}

}  // namespace

TEST_CASE("group advantages: frozen oracle values") {
  // mean 0.25, population std sqrt(0.1875)
  auto adv = group_advantages({1, 0, 0, 0}, 1e-8);
  REQUIRE(adv.size() == 4);
  CHECK(adv[0] == doctest::Approx(0.75 / std::sqrt(0.1875)).epsilon(1e-12));
  CHECK(adv[0] == doctest::Approx(1.7320508075688772).epsilon(1e-9));
  CHECK(adv[1] == doctest::Approx(-0.5773502691896258).epsilon(1e-9));

  auto pm = group_advantages({1, -1}, 1e-8);
  CHECK(pm[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pm[1] == doctest::Approx(-1.0).epsilon(1e-12));

  // all equal: the std floor engages, advantages vanish
  for (double a : group_advantages({0.3, 0.3, 0.3, 0.3}, 1e-8)) CHECK(a == 0.0);
}

TEST_CASE("group advantages: standardized moments and shift covariance") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    size_t g = 2 + rng.below(14);
    std::vector<double> rewards(g);
    for (double& r : rewards) r = rng.uniform() * 4.0 - 2.0;

    auto adv = group_advantages(rewards, 1e-8);
    double mean = 0, var = 0;
    for (double a : adv) mean += a;
    mean /= double(g);
    for (double a : adv) var += (a - mean) * (a - mean);
    var /= double(g);
    CHECK(std::abs(mean) < 1e-9);

    double rstd = 0, rmean = 0;
    for (double r : rewards) rmean += r;
    rmean /= double(g);
    for (double r : rewards) rstd += (r - rmean) * (r - rmean);
    rstd = std::sqrt(rstd / double(g));
    if (rstd > 1e-8) CHECK(var == doctest::Approx(1.0).epsilon(1e-6));

    // adding a constant to every reward leaves advantages unchanged
    std::vector<double> shifted = rewards;
    for (double& r : shifted) r += 3.25;
    auto adv2 = group_advantages(shifted, 1e-8);
    for (size_t i = 0; i < g; ++i) CHECK(adv2[i] == doctest::Approx(adv[i]).epsilon(1e-9));
  }
}

TEST_CASE("token surrogate: clip arithmetic") {
  CHECK(token_surrogate(1.5, 2.0, 0.2) == doctest::Approx(2.4));   // clip binds above
  CHECK(token_surrogate(1.5, -2.0, 0.2) == doctest::Approx(-3.0)); // min keeps unclipped
  CHECK(token_surrogate(1.0, 0.7, 0.2) == doctest::Approx(0.7));
  CHECK(token_surrogate(1.0, -0.7, 0.05) == doctest::Approx(-0.7));

  Rng rng(23);
  for (int i = 0; i < 500; ++i) {
    double r = 0.05 + rng.uniform() * 3.0;
    double a = rng.uniform() * 4.0 - 2.0;
    double eps = 0.05 + rng.uniform() * 0.5;
    double s = token_surrogate(r, a, eps);
    CHECK(std::abs(s) <= std::max(std::abs(r * a), (1 + eps) * std::abs(a)) + 1e-12);
    CHECK(token_surrogate(1.0, a, eps) == doctest::Approx(a));
  }
}

TEST_CASE("kl_token: closed forms and non-negativity") {
  CHECK(kl_token({0.5, 0.5}, {0.5, 0.5}) == 0.0);
  CHECK(kl_token({1.0, 0.0}, {0.5, 0.5}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(kl_token({0.5, 0.5}, {1.0, 0.0}), GrpoError);
  CHECK_THROWS_AS(kl_token({0.5, 0.5}, {0.3, 0.3, 0.4}), std::invalid_argument);

  Rng rng(29);
  for (int i = 0; i < 2000; ++i) {
    size_t n = 2 + rng.below(6);
    std::vector<double> p(n), q(n);
    double zp = 0, zq = 0;
    for (size_t k = 0; k < n; ++k) {
      p[k] = std::exp(2.0 * (rng.uniform() - 0.5));
      q[k] = std::exp(2.0 * (rng.uniform() - 0.5));
      zp += p[k];
      zq += q[k];
    }
    for (size_t k = 0; k < n; ++k) {
      p[k] /= zp;
      q[k] /= zq;
    }
    CHECK(kl_token(p, q) >= 0.0);
    CHECK(kl_token(p, p) <= 1e-12);
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(41);
  GrpoConfig config;
  config.group_size = 4;
  config.clip = 0.2;
  config.kl_coeff = 0.001;

  for (int trial = 0; trial < 5; ++trial) {
    // 8 states x 8 actions = 64 parameters
    TabularPolicy old_policy = random_policy(8, 8, 0.7, rng);
    TabularPolicy policy = random_policy(8, 8, 0.7, rng);
    TabularPolicy ref = random_policy(8, 8, 0.7, rng);
    auto batches = random_batches(old_policy, 2, 4, rng);

    auto grad = grpo_gradient(policy, ref, batches, config);
    const double h = 1e-6;
    for (size_t i = 0; i < policy.weights().size(); ++i) {
      double saved = policy.weights()[i];
      policy.weights()[i] = saved + h;
      double up = grpo_loss(policy, ref, batches, config);
      policy.weights()[i] = saved - h;
      double down = grpo_loss(policy, ref, batches, config);
      policy.weights()[i] = saved;
      double fd = (up - down) / (2 * h);
      CHECK(std::abs(grad[i] - fd) <= 1e-4 * std::max({1e-3, std::abs(fd), std::abs(grad[i])}));
    }
  }
}

TEST_CASE("zero advantage and zero kl coefficient leave parameters unchanged") {
  Rng rng(43);
  TabularPolicy old_policy = random_policy(4, 6, 0.5, rng);
  TabularPolicy policy = old_policy;
  TabularPolicy ref = old_policy;
  auto batches = random_batches(old_policy, 2, 4, rng);
  for (auto& b : batches) std::fill(b.advantages.begin(), b.advantages.end(), 0.0);

  GrpoConfig config;
  config.group_size = 4;
  config.kl_coeff = 0.0;
  auto before = policy.weights();
  grpo_step(policy, ref, batches, config);
  CHECK(policy.weights() == before);
}

TEST_CASE("single-action vocabulary has constant loss and zero gradient") {
  Rng rng(47);
  TabularPolicy old_policy(3, 1, 1.0);
  TabularPolicy policy(3, 1, 1.0);
  TabularPolicy ref(3, 1, 1.0);
  auto batches = random_batches(old_policy, 1, 4, rng);
  GrpoConfig config;
  config.group_size = 4;
  auto grad = grpo_gradient(policy, ref, batches, config);
  for (double g : grad) CHECK(g == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("ratios start at one when old equals current") {
  Rng rng(53);
  TabularPolicy policy = random_policy(4, 5, 0.4, rng);
  TabularPolicy ref = policy;
  auto batches = random_batches(policy, 2, 4, rng);
  GrpoConfig config;
  config.group_size = 4;
  StepStats stats;
  grpo_gradient(policy, ref, batches, config, &stats);
  CHECK(stats.clip_fraction == 0.0);
  CHECK(stats.mean_kl == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("non-finite reward input rejects the step") {
  Rng rng(59);
  TabularPolicy old_policy = random_policy(4, 5, 0.4, rng);
  TabularPolicy policy = old_policy;
  TabularPolicy ref = old_policy;
  auto batches = random_batches(old_policy, 1, 4, rng);
  batches[0].advantages[0] = std::numeric_limits<double>::quiet_NaN();
  auto before = policy.weights();
  GrpoConfig config;
  config.group_size = 4;
  CHECK_THROWS_AS(grpo_step(policy, ref, batches, config), GrpoError);
  CHECK(policy.weights() == before);  // rejected step leaves the policy intact
}

TEST_CASE("config validation") {
  GrpoConfig bad;
  bad.group_size = 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  GrpoConfig clip;
  clip.clip = 1.5;
  CHECK_THROWS_AS(clip.validate(), std::invalid_argument);
  GrpoConfig ok;
  CHECK_NOTHROW(ok.validate());
  CHECK(ok.group_size == 8);
  CHECK(ok.clip == 0.2);
  CHECK(ok.kl_coeff == 0.001);
  CHECK(ok.temperature == 1.0);
}
