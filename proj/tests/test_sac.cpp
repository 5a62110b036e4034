#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lanerl/env.hpp"
#include "lanerl/sac.hpp"
#include "oracles/finite_diff.hpp"

using namespace lanerl;
using namespace lanerl::rl;

namespace {

constexpr double kPi = 3.14159265358979323846;

/// Linear nets over one-hot states: Q = w . [s, a] + b, mean/log_std linear.
nn::NetSpec linear_spec(int state_dim, int action_dim) {
  nn::NetSpec spec;
  spec.input = nn::InputKind::kVector;
  spec.vec_dim = state_dim;
  spec.channels = {};
  spec.head_hidden = {};
  spec.action_dim = action_dim;
  return spec;
}

Observation vec_obs(std::vector<double> v) {
  Observation o;
  o.vec = std::move(v);
  return o;
}

double log_prob_1d(double eps, double log_std, double u) {
  // Reference density of tanh(mean + sigma*eps), written independently.
  double a = std::tanh(u);
  return -0.5 * eps * eps - log_std - 0.5 * std::log(2.0 * kPi) - std::log1p(-a * a);
}

}  // namespace

TEST_CASE("critic_targets: terminal samples bootstrap to the reward alone") {
  nn::NetSpec spec = linear_spec(2, 1);
  SACConfig cfg;
  cfg.batch = 1;
  LearnerState learner = make_learner(spec, cfg, 42);
  Rng rng(1);
  nn::init_params(learner.critic1, rng);
  nn::init_params(learner.critic2, rng);
  learner.target1 = learner.critic1;
  learner.target2 = learner.critic2;

  BatchDraw draw;
  draw.batch = {Transition{vec_obs({1, 0}), {0.3}, 1.75, vec_obs({0, 1}), true}};
  draw.noise_pi = nn::Tensor({1, 1});
  draw.noise_pi_next = nn::Tensor({1, 1});
  draw.noise_pi_next[0] = 0.7;
  std::vector<double> y = critic_targets(learner, draw, cfg);
  CHECK(y.size() == 1);
  CHECK(y[0] == 1.75);
}

TEST_CASE("critic_targets: identical twin critics make min a no-op") {
  nn::NetSpec spec = linear_spec(2, 1);
  SACConfig cfg;
  LearnerState learner = make_learner(spec, cfg, 43);
  Rng rng(2);
  nn::init_params(learner.critic1, rng);
  learner.critic2 = learner.critic1;
  learner.target1 = learner.critic1;
  learner.target2 = learner.critic1;

  BatchDraw draw;
  draw.batch = {Transition{vec_obs({1, 0}), {0.1}, 0.5, vec_obs({0, 1}), false}};
  draw.noise_pi = nn::Tensor({1, 1});
  draw.noise_pi_next = nn::Tensor({1, 1});
  draw.noise_pi_next[0] = -0.4;
  std::vector<double> twin = critic_targets(learner, draw, cfg);

  // Swapping the (identical) targets must not change anything.
  std::swap(learner.target1, learner.target2);
  std::vector<double> swapped = critic_targets(learner, draw, cfg);
  CHECK(twin == swapped);
}

TEST_CASE("critic_targets match hand-solved soft Bellman values on a 3-state chain") {
  // States one-hot in R^3; linear actor and critics with explicit weights.
  nn::NetSpec spec = linear_spec(3, 1);
  SACConfig cfg;
  cfg.gamma = 0.9;
  cfg.init_temperature = 0.25;
  LearnerState learner = make_learner(spec, cfg, 44);

  // actor head.out: rows [mean; log_std], each 1x3 plus bias.
  learner.actor.values = {0.4, -0.3, 0.2,    // mean weights
                          -1.0, -0.8, -1.2,  // log_std weights
                          0.1, 0.05};        // biases (mean, log_std)
  learner.target1.values = {0.5, -0.2, 0.3, 0.8, 0.02};   // w(s0,s1,s2), w_a, b
  learner.target2.values = {0.45, -0.1, 0.25, 0.6, 0.04};

  BatchDraw draw;
  draw.batch = {
      Transition{vec_obs({1, 0, 0}), {0.10}, 0.5, vec_obs({0, 1, 0}), false},
      Transition{vec_obs({0, 1, 0}), {-0.20}, 1.0, vec_obs({0, 0, 1}), false},
      Transition{vec_obs({0, 0, 1}), {0.05}, -0.3, vec_obs({1, 0, 0}), true},
  };
  draw.noise_pi = nn::Tensor({3, 1});
  draw.noise_pi_next = nn::Tensor({3, 1});
  draw.noise_pi_next[0] = 0.9;
  draw.noise_pi_next[1] = -1.3;
  draw.noise_pi_next[2] = 0.2;

  std::vector<double> got = critic_targets(learner, draw, cfg);

  double lambda = 0.25;
  for (int i = 0; i < 3; ++i) {
    const Transition& tr = draw.batch[i];
    // Hand evaluation of the linear actor on s'.
    double mean = 0.0, log_std = 0.0;
    for (int j = 0; j < 3; ++j) {
      mean += learner.actor.values[j] * tr.s2.vec[j];
      log_std += learner.actor.values[3 + j] * tr.s2.vec[j];
    }
    mean += learner.actor.values[6];
    log_std += learner.actor.values[7];
    double eps = draw.noise_pi_next[i];
    double u = mean + std::exp(log_std) * eps;
    double a = std::tanh(u);
    double lp = log_prob_1d(eps, log_std, u);
    auto q = [&](const std::vector<double>& w) {
      return w[0] * tr.s2.vec[0] + w[1] * tr.s2.vec[1] + w[2] * tr.s2.vec[2] + w[3] * a + w[4];
    };
    double qmin = std::min(q(learner.target1.values), q(learner.target2.values));
    double expect = tr.reward + (tr.done ? 0.0 : cfg.gamma * (qmin - lambda * lp));
    CHECK(std::fabs(got[i] - expect) < 1e-10);
  }
}

TEST_CASE("critic gradients: perfect predictions give zero loss and zero gradient") {
  nn::NetSpec spec = linear_spec(2, 1);
  SACConfig cfg;
  LearnerState learner = make_learner(spec, cfg, 45);
  // Zero critics predict 0; terminal zero-reward targets are also 0.
  std::fill(learner.critic1.values.begin(), learner.critic1.values.end(), 0.0);
  std::fill(learner.critic2.values.begin(), learner.critic2.values.end(), 0.0);
  BatchDraw draw;
  draw.batch = {Transition{vec_obs({1, 0}), {0.2}, 0.0, vec_obs({0, 1}), true},
                Transition{vec_obs({0, 1}), {-0.1}, 0.0, vec_obs({1, 0}), true}};
  draw.noise_pi = nn::Tensor({2, 1});
  draw.noise_pi_next = nn::Tensor({2, 1});
  Gradients g = compute_gradients(learner, draw, cfg);
  CHECK(g.stats.critic_loss == 0.0);
  for (double v : g.critic1) CHECK(v == 0.0);
  for (double v : g.critic2) CHECK(v == 0.0);
}

TEST_CASE("critic gradients match the closed form for a scalar linear critic") {
  nn::NetSpec spec = linear_spec(1, 1);
  SACConfig cfg;
  LearnerState learner = make_learner(spec, cfg, 46);
  // Q_i(s, a) = w_s s + w_a a + b.
  learner.critic1.values = {0.7, -0.4, 0.2};
  learner.critic2.values = {-0.3, 0.5, 0.1};

  double s = 2.0, a = 0.5, r = 1.7;
  BatchDraw draw;
  draw.batch = {Transition{vec_obs({s}), {a}, r, vec_obs({s}), true}};
  draw.noise_pi = nn::Tensor({1, 1});
  draw.noise_pi_next = nn::Tensor({1, 1});
  Gradients g = compute_gradients(learner, draw, cfg);

  auto check_one = [&](const std::vector<double>& w, const std::vector<double>& grad) {
    double q = w[0] * s + w[1] * a + w[2];
    double resid = q - r;  // terminal: target = r
    CHECK(grad[0] == doctest::Approx(2.0 * resid * s).epsilon(1e-12));
    CHECK(grad[1] == doctest::Approx(2.0 * resid * a).epsilon(1e-12));
    CHECK(grad[2] == doctest::Approx(2.0 * resid).epsilon(1e-12));
    return resid * resid;
  };
  double l1 = check_one(learner.critic1.values, g.critic1);
  double l2 = check_one(learner.critic2.values, g.critic2);
  CHECK(g.stats.critic_loss == doctest::Approx(l1 + l2).epsilon(1e-12));
  CHECK(g.stats.critic_loss >= 0.0);
}

TEST_CASE("actor gradient vanishes with zero temperature and constant critics") {
  nn::NetSpec spec = linear_spec(2, 1);
  SACConfig cfg;
  LearnerState learner = make_learner(spec, cfg, 47);
  Rng rng(3);
  nn::init_params(learner.actor, rng);
  learner.log_temperature = -746.0;  // exp underflows to exactly 0
  CHECK(learner.temperature() == 0.0);
  // Zero critic weights: Q identically 0 regardless of the action.
  std::fill(learner.critic1.values.begin(), learner.critic1.values.end(), 0.0);
  std::fill(learner.critic2.values.begin(), learner.critic2.values.end(), 0.0);

  BatchDraw draw;
  draw.batch = {Transition{vec_obs({1, 0}), {0.2}, 0.3, vec_obs({0, 1}), false},
                Transition{vec_obs({0, 1}), {-0.6}, -0.1, vec_obs({1, 0}), false}};
  draw.noise_pi = nn::Tensor({2, 1});
  draw.noise_pi[0] = 0.4;
  draw.noise_pi[1] = -1.1;
  draw.noise_pi_next = nn::Tensor({2, 1});
  Gradients g = compute_gradients(learner, draw, cfg);
  for (double v : g.actor) CHECK(v == 0.0);
}

TEST_CASE("actor gradient matches finite differences with frozen noise") {
  nn::NetSpec spec;
  spec.input = nn::InputKind::kVector;
  spec.vec_dim = 2;
  spec.channels = {4};
  spec.head_hidden = {4};
  spec.action_dim = 1;
  spec.activation = nn::Activation::kTanh;  // smooth everywhere: FD stays valid
  SACConfig cfg;
  cfg.init_temperature = 0.3;
  LearnerState learner = make_learner(spec, cfg, 48);
  Rng rng(4);
  nn::init_params(learner.actor, rng);
  nn::init_params(learner.critic1, rng);
  nn::init_params(learner.critic2, rng);

  BatchDraw draw;
  Rng drng(5);
  for (int i = 0; i < 6; ++i) {
    draw.batch.push_back(Transition{vec_obs({drng.uniform(-1, 1), drng.uniform(-1, 1)}),
                                    {drng.uniform(-1, 1)},
                                    drng.uniform(-1, 1),
                                    vec_obs({drng.uniform(-1, 1), drng.uniform(-1, 1)}),
                                    false});
  }
  draw.noise_pi = nn::Tensor({6, 1});
  draw.noise_pi_next = nn::Tensor({6, 1});
  for (int i = 0; i < 6; ++i) {
    draw.noise_pi[i] = drng.gaussian();
    draw.noise_pi_next[i] = drng.gaussian();
  }

  Gradients g = compute_gradients(learner, draw, cfg);
  auto f = [&](const std::vector<double>& x) {
    LearnerState probe = learner;
    probe.actor.values = x;
    return compute_gradients(probe, draw, cfg).stats.actor_loss;
  };
  std::vector<double> numeric = oracles::central_diff(f, learner.actor.values, 1e-5);
  CHECK(oracles::max_rel_err(g.actor, numeric) < 1e-4);
}

TEST_CASE("SAC finds the analytic optimum of a quadratic objective") {
  // One state, r = -a^2, terminal: critics fit Q(a) ~ -a^2, the squashed
  // policy mean must settle at 0.
  nn::NetSpec spec;
  spec.input = nn::InputKind::kVector;
  spec.vec_dim = 1;
  spec.channels = {};
  spec.head_hidden = {16};
  spec.action_dim = 1;
  SACConfig cfg;
  cfg.lr = 3e-3;
  cfg.batch = 64;
  cfg.target_entropy = -1.0;
  cfg.warmup_steps = 0;
  LearnerState learner = make_learner(spec, cfg, 49);

  ReplayBuffer buffer(10000);
  Rng rng(6);
  for (int i = 0; i < 2000; ++i) {
    double a = rng.uniform(-1.0, 1.0);
    buffer.insert(Transition{vec_obs({1.0}), {a}, -a * a, vec_obs({1.0}), true});
  }
  Rng train_rng(7);
  for (int i = 0; i < 1500; ++i) train_step(learner, buffer, train_rng, cfg);

  std::vector<double> act = select_action(learner, vec_obs({1.0}), ActionMode::kDeterministic, nullptr);
  CHECK(std::fabs(act[0]) < 0.05);
}

TEST_CASE("temperature update rule and fixed point") {
  nn::NetSpec spec = linear_spec(1, 1);
  SACConfig cfg;
  cfg.lr = 1e-3;
  LearnerState learner = make_learner(spec, cfg, 50);
  double initial = learner.log_temperature;

  // Synthetic fixed log-probs: the applied change is -lr * mean(-log pi - H*).
  Gradients g;
  g.actor.assign(learner.actor.size(), 0.0);
  g.critic1.assign(learner.critic1.size(), 0.0);
  g.critic2.assign(learner.critic2.size(), 0.0);
  double mean_log_pi = -3.4;
  g.log_temperature = -mean_log_pi - cfg.target_entropy;  // = 3.4 + 2 = 5.4
  apply_gradients(learner, g, cfg);
  CHECK(learner.log_temperature ==
        doctest::Approx(initial - cfg.lr * 5.4).epsilon(1e-12));

  // Entropy above target -> positive gradient -> temperature decreases.
  CHECK(learner.log_temperature < initial);

  // At the fixed point the update is zero.
  LearnerState fixed = make_learner(spec, cfg, 51);
  double before = fixed.log_temperature;
  Gradients g0 = g;
  g0.log_temperature = 0.0;
  apply_gradients(fixed, g0, cfg);
  CHECK(fixed.log_temperature == before);
}

TEST_CASE("temperature gradient equals mean(-log pi - target_entropy)") {
  nn::NetSpec spec = linear_spec(2, 1);
  SACConfig cfg;
  LearnerState learner = make_learner(spec, cfg, 52);
  Rng rng(8);
  nn::init_params(learner.actor, rng);
  BatchDraw draw;
  draw.batch = {Transition{vec_obs({1, 0}), {0.1}, 0.2, vec_obs({0, 1}), false},
                Transition{vec_obs({0, 1}), {0.3}, 0.1, vec_obs({1, 0}), false}};
  draw.noise_pi = nn::Tensor({2, 1});
  draw.noise_pi[0] = 0.7;
  draw.noise_pi[1] = -0.2;
  draw.noise_pi_next = nn::Tensor({2, 1});
  Gradients g = compute_gradients(learner, draw, cfg);
  CHECK(g.log_temperature ==
        doctest::Approx(-g.stats.mean_log_pi - cfg.target_entropy).epsilon(1e-12));
}

TEST_CASE("soft_update blends targets toward live critics") {
  nn::NetSpec spec = linear_spec(1, 1);
  SACConfig cfg;
  LearnerState learner = make_learner(spec, cfg, 53);

  // target == live stays put.
  learner.critic1.values = {1.0, 2.0, 3.0};
  learner.target1 = learner.critic1;
  soft_update(learner, 0.02);
  CHECK(learner.target1.values == learner.critic1.values);

  // target 0, live 1 -> 0.02.
  learner.critic1.values = {1.0, 1.0, 1.0};
  learner.target1.values = {0.0, 0.0, 0.0};
  soft_update(learner, 0.02);
  CHECK(learner.target1.values[0] == doctest::Approx(0.02).epsilon(1e-15));

  // Geometric decay: the gap roughly halves every 34 applications.
  learner.target1.values = {0.0, 0.0, 0.0};
  double gap0 = 1.0;
  for (int i = 0; i < 34; ++i) soft_update(learner, 0.02);
  double gap = 1.0 - learner.target1.values[0];
  CHECK(gap / gap0 == doctest::Approx(std::pow(0.98, 34)).epsilon(1e-12));
  CHECK(std::fabs(gap / gap0 - 0.5) < 0.01);
}

TEST_CASE("train_step without enough data is a signalled no-op") {
  nn::NetSpec spec = linear_spec(1, 1);
  SACConfig cfg;
  cfg.batch = 64;
  LearnerState learner = make_learner(spec, cfg, 54);
  std::uint64_t digest = learner.digest();
  ReplayBuffer buffer(1000);
  buffer.insert(Transition{vec_obs({0.0}), {0.0}, 0.0, vec_obs({0.0}), true});
  Rng rng(9);
  CHECK_FALSE(train_step(learner, buffer, rng, cfg).has_value());
  CHECK(learner.digest() == digest);
}

TEST_CASE("updates keep parameters finite under adversarial rewards (property)") {
  nn::NetSpec spec = linear_spec(2, 1);
  SACConfig cfg;
  cfg.batch = 32;
  cfg.warmup_steps = 0;
  LearnerState learner = make_learner(spec, cfg, 55);
  ReplayBuffer buffer(5000);
  Rng rng(10);
  for (int i = 0; i < 500; ++i) {
    double r = rng.uniform(-1e6, 1e6);  // reward clipping is off by design
    buffer.insert(Transition{vec_obs({rng.uniform(-1, 1), rng.uniform(-1, 1)}),
                             {rng.uniform(-1, 1)},
                             r,
                             vec_obs({rng.uniform(-1, 1), rng.uniform(-1, 1)}),
                             rng.bernoulli(0.2)});
  }
  Rng train_rng(11);
  for (int i = 0; i < 50; ++i) {
    CHECK(train_step(learner, buffer, train_rng, cfg).has_value());
  }
  CHECK(learner.finite());
}

TEST_CASE("update scheduler: 1000 steps at utd 0.5 means exactly 500 updates") {
  UpdateScheduler sched(0.5);
  int total = 0;
  for (int i = 0; i < 1000; ++i) total += sched.on_env_step();
  CHECK(total == 500);
}

TEST_CASE("select_action: deterministic repeatability and range (property)") {
  nn::NetSpec spec = linear_spec(3, 2);
  SACConfig cfg;
  LearnerState learner = make_learner(spec, cfg, 56);
  Rng rng(12);
  nn::init_params(learner.actor, rng);

  Observation obs = vec_obs({0.3, -0.8, 0.5});
  std::vector<double> a1 = select_action(learner, obs, ActionMode::kDeterministic, nullptr);
  std::vector<double> a2 = select_action(learner, obs, ActionMode::kDeterministic, nullptr);
  CHECK(a1 == a2);

  Rng sample_rng(13);
  Rng obs_rng(14);
  for (int i = 0; i < 20000; ++i) {
    Observation o = vec_obs({obs_rng.uniform(-5, 5), obs_rng.uniform(-5, 5), obs_rng.uniform(-5, 5)});
    std::vector<double> a = select_action(learner, o,
                                          i % 2 ? ActionMode::kStochastic : ActionMode::kDeterministic,
                                          &sample_rng);
    for (double c : a) {
      CHECK(c >= -1.0);
      CHECK(c <= 1.0);
    }
  }
}

TEST_CASE("stochastic action mean approaches the deterministic action for small std") {
  nn::NetSpec spec = linear_spec(2, 2);
  SACConfig cfg;
  LearnerState learner = make_learner(spec, cfg, 57);
  // Zero weights; biases fix mean (0.3, -0.2) and log_std (-4, -4).
  // Actor head.out layout: rows = [mean_0, mean_1, ls_0, ls_1], bias last 4.
  std::size_t bias_off = learner.actor.segments.back().offset;
  learner.actor.values[bias_off + 0] = 0.3;
  learner.actor.values[bias_off + 1] = -0.2;
  learner.actor.values[bias_off + 2] = -4.0;
  learner.actor.values[bias_off + 3] = -4.0;

  Observation obs = vec_obs({0.0, 0.0});
  std::vector<double> det = select_action(learner, obs, ActionMode::kDeterministic, nullptr);
  Rng rng(15);
  double acc0 = 0.0, acc1 = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    std::vector<double> a = select_action(learner, obs, ActionMode::kStochastic, &rng);
    acc0 += a[0];
    acc1 += a[1];
  }
  double sigma = std::exp(-4.0);
  CHECK(std::fabs(acc0 / n - det[0]) < 3.0 * sigma / 100.0 * 10.0);  // 3 sigma / sqrt(n)
  CHECK(std::fabs(acc1 / n - det[1]) < 3.0 * sigma / 100.0 * 10.0);
}

TEST_CASE("critic symmetry: swapping the twin critics changes nothing") {
  nn::NetSpec spec = linear_spec(2, 1);
  SACConfig cfg;
  LearnerState learner = make_learner(spec, cfg, 58);
  Rng rng(16);
  nn::init_params(learner.actor, rng);
  nn::init_params(learner.critic1, rng);
  nn::init_params(learner.critic2, rng);
  learner.target1 = learner.critic1;
  learner.target2 = learner.critic2;

  BatchDraw draw;
  Rng drng(17);
  for (int i = 0; i < 5; ++i) {
    draw.batch.push_back(Transition{vec_obs({drng.uniform(-1, 1), drng.uniform(-1, 1)}),
                                    {drng.uniform(-1, 1)},
                                    drng.uniform(-1, 1),
                                    vec_obs({drng.uniform(-1, 1), drng.uniform(-1, 1)}),
                                    false});
  }
  draw.noise_pi = nn::Tensor({5, 1});
  draw.noise_pi_next = nn::Tensor({5, 1});
  for (int i = 0; i < 5; ++i) {
    draw.noise_pi[i] = drng.gaussian();
    draw.noise_pi_next[i] = drng.gaussian();
  }

  std::vector<double> targets = critic_targets(learner, draw, cfg);
  Gradients g = compute_gradients(learner, draw, cfg);

  LearnerState swapped = learner;
  std::swap(swapped.critic1, swapped.critic2);
  std::swap(swapped.target1, swapped.target2);
  std::swap(swapped.critic1_opt, swapped.critic2_opt);
  std::vector<double> targets2 = critic_targets(swapped, draw, cfg);
  Gradients g2 = compute_gradients(swapped, draw, cfg);

  CHECK(targets == targets2);
  CHECK(g.actor == g2.actor);
  CHECK(g.critic1 == g2.critic2);
  CHECK(g.critic2 == g2.critic1);
}

TEST_CASE("replay sampling is uniform over occupied slots") {
  ReplayBuffer buffer(64);
  for (int i = 0; i < 64; ++i) {
    buffer.insert(Transition{vec_obs({static_cast<double>(i)}), {0.0}, 0.0, vec_obs({0.0}), true});
  }
  Rng rng(18);
  const int n = 128000;
  std::vector<int> counts(64, 0);
  std::vector<std::size_t> idx = buffer.sample_indices(n, rng);
  for (std::size_t i : idx) counts[i]++;
  double p = 1.0 / 64.0, expect = n * p, sigma = std::sqrt(n * p * (1 - p));
  for (int c : counts) CHECK(std::fabs(c - expect) < 5.0 * sigma);
}

TEST_CASE("replay ring overwrites oldest entries at capacity") {
  ReplayBuffer buffer(4);
  for (int i = 0; i < 6; ++i) {
    buffer.insert(Transition{vec_obs({static_cast<double>(i)}), {0.0}, 0.0, vec_obs({0.0}), true});
  }
  CHECK(buffer.size() == 4);
  CHECK(buffer.inserted() == 6);
  std::vector<Transition> all = buffer.gather({0, 1, 2, 3});
  // Slots 0 and 1 were overwritten by items 4 and 5.
  CHECK(all[0].s.vec[0] == 4.0);
  CHECK(all[1].s.vec[0] == 5.0);
  CHECK(all[2].s.vec[0] == 2.0);
}
