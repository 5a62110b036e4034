#include <doctest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "lanerl/channel.hpp"
#include "lanerl/disttrain.hpp"
#include "lanerl/env.hpp"

using namespace lanerl;
using namespace lanerl::dist;
using namespace lanerl::rl;

namespace {

nn::NetSpec pm_spec() {
  nn::NetSpec spec;
  spec.input = nn::InputKind::kVector;
  spec.vec_dim = 2;
  spec.channels = {16};
  spec.head_hidden = {16};
  spec.action_dim = 1;
  return spec;
}

SACConfig fast_cfg() {
  SACConfig cfg;
  cfg.batch = 32;
  cfg.warmup_steps = 64;
  cfg.buffer_capacity = 50000;
  return cfg;
}

EnvFactory pm_factory() {
  return [](int) { return std::make_unique<PointMassEnv>(); };
}

DistTrainSpec base_spec(int n, int k, bool lockstep, std::int64_t steps, std::uint64_t seed) {
  DistTrainSpec spec;
  spec.net = pm_spec();
  spec.sac = fast_cfg();
  spec.topology.n_envs = n;
  spec.topology.k_optimizers = k;
  spec.topology.lockstep = lockstep;
  spec.topology.broadcast_period = 1;
  spec.make_env = pm_factory();
  spec.total_env_steps = steps;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("channel preserves FIFO order and close semantics") {
  Channel<int> ch(4);
  CHECK(ch.send(1));
  CHECK(ch.send(2));
  CHECK(ch.send(3));
  CHECK(*ch.recv() == 1);
  CHECK(*ch.recv() == 2);
  ch.close();
  CHECK(*ch.recv() == 3);  // drains after close
  CHECK_FALSE(ch.recv().has_value());
  CHECK_FALSE(ch.send(4));
}

TEST_CASE("channel blocks at capacity until a receiver drains") {
  Channel<int> ch(1);
  CHECK(ch.send(10));
  std::atomic<bool> sent{false};
  std::thread producer([&] {
    ch.send(11);
    sent.store(true);
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(30));
  CHECK_FALSE(sent.load());  // capacity 1: second send is parked
  CHECK(*ch.recv() == 10);
  producer.join();
  CHECK(sent.load());
  CHECK(*ch.recv() == 11);
}

TEST_CASE("all_reduce_mean: identities and the sequential-order oracle") {
  std::vector<double> g1 = {1.0, -2.0, 3.0};
  std::vector<double> g2 = {-1.0, 2.0, -3.0};

  // K identical vectors reduce to themselves.
  std::vector<double> same = all_reduce_mean({&g1, &g1, &g1});
  CHECK(same == g1);

  // Opposites cancel exactly.
  std::vector<double> zero = all_reduce_mean({&g1, &g2});
  for (double v : zero) CHECK(v == 0.0);

  // Three random vectors: bitwise equal to summation in node order.
  Rng rng(61);
  std::vector<std::vector<double>> gs(3, std::vector<double>(257));
  for (auto& g : gs) {
    for (double& v : g) v = rng.uniform(-1, 1);
  }
  std::vector<double> got = all_reduce_mean({&gs[0], &gs[1], &gs[2]});
  for (std::size_t i = 0; i < 257; ++i) {
    double expect = ((gs[0][i] + gs[1][i]) + gs[2][i]) * (1.0 / 3.0);
    CHECK(got[i] == expect);
  }

  std::vector<double> bad = {1.0};
  CHECK_THROWS_AS(all_reduce_mean({&g1, &bad}), std::runtime_error);
}

TEST_CASE("lockstep N=1 K=1 reproduces the sequential reference bit for bit") {
  const std::int64_t steps = 800;  // ~368 updates past warmup
  std::vector<std::uint64_t> ref_digests, lock_digests;

  DistTrainSpec ref = base_spec(1, 1, false, steps, 99);
  ref.hooks.checkpoint_period = 1;
  ref.hooks.on_checkpoint = [&](const LearnerState& l, std::int64_t) {
    ref_digests.push_back(l.digest());
  };
  TrainResult ref_result = train_reference(ref);

  DistTrainSpec lock = base_spec(1, 1, true, steps, 99);
  lock.hooks.checkpoint_period = 1;
  lock.hooks.on_checkpoint = [&](const LearnerState& l, std::int64_t) {
    lock_digests.push_back(l.digest());
  };
  TrainResult lock_result = train_distributed(lock);

  REQUIRE(ref_digests.size() > 100);
  CHECK(ref_digests == lock_digests);
  CHECK(ref_result.learner.digest() == lock_result.learner.digest());
  CHECK(ref_result.env_steps == lock_result.env_steps);
  CHECK(ref_result.updates == lock_result.updates);
}

TEST_CASE("env nodes with a scripted zero policy reproduce plain rollouts exactly") {
  const int n_envs = 4;
  const std::int64_t steps = 240;
  DistTrainSpec spec = base_spec(n_envs, 1, true, steps, 123);
  spec.sac.utd = 0.0;  // collection only
  spec.policy_override = [](const Observation&, int) { return std::vector<double>{0.0}; };
  std::vector<std::vector<Transition>> streams(n_envs);
  spec.hooks.on_transition = [&](const Transition& tr, int env) { streams[env].push_back(tr); };
  TrainResult result = train_distributed(spec);
  CHECK(result.env_steps == steps);
  CHECK(result.updates == 0);

  // Independent single-process rollouts of the zero policy, one per node.
  for (int i = 0; i < n_envs; ++i) {
    PointMassEnv env;
    std::uint64_t env_seed = derive_seed(123, "env", static_cast<std::uint64_t>(i));
    std::int64_t episode = 0;
    Observation obs = env.reset(derive_seed(env_seed, "episode", 0));
    for (const Transition& tr : streams[i]) {
      CHECK(tr.s == obs);
      CHECK(tr.action == std::vector<double>{0.0});
      StepResult r = env.step({0.0});
      CHECK(tr.reward == r.reward);
      CHECK(tr.s2 == r.obs);
      CHECK(tr.done == r.done);
      obs = r.obs;
      if (r.done || r.truncated) {
        ++episode;
        obs = env.reset(derive_seed(env_seed, "episode", static_cast<std::uint64_t>(episode)));
      }
    }
  }
  // Distinct seeds produce disjoint trajectory streams.
  CHECK(streams[0][0].s.vec != streams[1][0].s.vec);
}

TEST_CASE("no broadcasts means actors stay on version zero") {
  DistTrainSpec spec = base_spec(2, 1, true, 120, 7);
  spec.sac.utd = 0.0;  // no updates, hence no snapshots
  spec.policy_override = [](const Observation&, int) { return std::vector<double>{0.1}; };
  TrainResult result = train_distributed(spec);
  REQUIRE(result.final_actor_versions.size() == 2);
  CHECK(result.final_actor_versions[0] == 0);
  CHECK(result.final_actor_versions[1] == 0);
}

TEST_CASE("lockstep actors never lag more than the broadcast period") {
  DistTrainSpec spec = base_spec(2, 1, true, 400, 8);
  spec.topology.broadcast_period = 10;
  TrainResult result = train_distributed(spec);
  REQUIRE(result.updates > 20);
  for (std::uint64_t v : result.final_actor_versions) {
    CHECK(static_cast<std::int64_t>(v) >= result.updates - 10);
  }
}

TEST_CASE("K=2 averaged update matches the concatenated-batch oracle") {
  nn::NetSpec spec = pm_spec();
  SACConfig cfg = fast_cfg();
  cfg.batch = 64;

  ReplayBuffer buffer(10000);
  Rng fill(62);
  PointMassEnv env;
  Observation obs = env.reset(1);
  for (int i = 0; i < 600; ++i) {
    std::vector<double> a{fill.uniform(-1, 1)};
    StepResult r = env.step(a);
    buffer.insert(Transition{obs, a, r.reward, r.obs, r.done});
    obs = r.obs;
    if (r.truncated) obs = env.reset(2 + i);
  }

  for (int round = 0; round < 3; ++round) {
    CAPTURE(round);
    LearnerState dist_learner = make_learner(spec, cfg, 63);
    LearnerState ref_learner = make_learner(spec, cfg, 63);
    // Advance both identically for `round` updates first.
    Rng warm(70);
    for (int r = 0; r < round; ++r) {
      BatchDraw d = draw_batch(buffer, cfg.batch, spec.action_dim, warm);
      Gradients g = compute_gradients(dist_learner, d, cfg);
      apply_gradients(dist_learner, g, cfg);
      Gradients g2 = compute_gradients(ref_learner, d, cfg);
      apply_gradients(ref_learner, g2, cfg);
    }

    Rng rng_a(64 + round), rng_b(65 + round);
    BatchDraw da = draw_batch(buffer, cfg.batch, spec.action_dim, rng_a);
    BatchDraw db = draw_batch(buffer, cfg.batch, spec.action_dim, rng_b);

    // Two optimizer replicas average their local gradients.
    Gradients ga = compute_gradients(dist_learner, da, cfg);
    Gradients gb = compute_gradients(dist_learner, db, cfg);
    std::vector<const Gradients*> parts{&ga, &gb};
    std::vector<const std::vector<double>*> actor_parts{&ga.actor, &gb.actor};
    Gradients avg;
    avg.actor = all_reduce_mean({&ga.actor, &gb.actor});
    avg.critic1 = all_reduce_mean({&ga.critic1, &gb.critic1});
    avg.critic2 = all_reduce_mean({&ga.critic2, &gb.critic2});
    avg.log_temperature = 0.5 * (ga.log_temperature + gb.log_temperature);
    avg.stats = ga.stats;
    apply_gradients(dist_learner, avg, cfg);

    // Single-process oracle: one update on the concatenated 2x batch.
    BatchDraw dcat = concat_draws(da, db);
    Gradients gcat = compute_gradients(ref_learner, dcat, cfg);
    apply_gradients(ref_learner, gcat, cfg);

    auto max_diff = [](const std::vector<double>& a, const std::vector<double>& b) {
      double worst = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::fabs(a[i] - b[i]));
      }
      return worst;
    };
    CHECK(max_diff(dist_learner.actor.values, ref_learner.actor.values) < 1e-12);
    CHECK(max_diff(dist_learner.critic1.values, ref_learner.critic1.values) < 1e-12);
    CHECK(max_diff(dist_learner.critic2.values, ref_learner.critic2.values) < 1e-12);
    CHECK(max_diff(dist_learner.target1.values, ref_learner.target1.values) < 1e-12);
    CHECK(std::fabs(dist_learner.log_temperature - ref_learner.log_temperature) < 1e-12);
  }
}

TEST_CASE("async K=2 keeps replicas bit-identical after every all-reduce") {
  DistTrainSpec spec = base_spec(2, 2, false, 600, 11);
  TrainResult result = train_distributed(spec);
  CHECK(result.updates > 100);
  // Digest exchange ran on every round and found no divergence.
  CHECK(result.digest_rounds_verified == result.updates);
}

TEST_CASE("liveness: tiny channel capacities still make progress") {
  DistTrainSpec spec = base_spec(3, 2, false, 450, 12);
  spec.topology.channel_capacity = 1;
  TrainResult result = train_distributed(spec);
  CHECK(result.env_steps == 450);
  CHECK(result.updates > 0);
}

TEST_CASE("a crashing environment aborts the run with a diagnostic") {
  class FaultyEnv : public RolloutEnv {
   public:
    Observation reset(std::uint64_t) override {
      Observation o;
      o.vec = {0.0, 0.0};
      return o;
    }
    StepResult step(const std::vector<double>&) override {
      if (++count_ > 40) throw std::runtime_error("sensor failure");
      StepResult r;
      r.obs.vec = {0.0, 0.0};
      return r;
    }
    int action_dim() const override { return 1; }

   private:
    int count_ = 0;
  };

  DistTrainSpec spec = base_spec(1, 1, false, 5000, 13);
  spec.make_env = [](int) { return std::make_unique<FaultyEnv>(); };
  CHECK_THROWS_WITH_AS(train_distributed(spec),
                       doctest::Contains("sensor failure"), std::runtime_error);
}
