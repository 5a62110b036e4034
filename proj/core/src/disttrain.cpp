#include "lanerl/disttrain.hpp"

#include <atomic>
#include <chrono>
#include <limits>
#include <condition_variable>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "lanerl/channel.hpp"

namespace lanerl::dist {

using rl::BatchDraw;
using rl::Gradients;
using rl::LearnerState;
using rl::ReplayBuffer;
using rl::Transition;

void Topology::validate() const {
  if (n_envs < 1) throw std::invalid_argument("Topology: n_envs must be >= 1");
  if (k_optimizers < 1) throw std::invalid_argument("Topology: k_optimizers must be >= 1");
  if (channel_capacity < 1) throw std::invalid_argument("Topology: channel capacity must be >= 1");
  if (broadcast_period < 1) throw std::invalid_argument("Topology: broadcast_period must be >= 1");
}

std::vector<double> all_reduce_mean(const std::vector<const std::vector<double>*>& parts) {
  if (parts.empty()) throw std::invalid_argument("all_reduce: nothing to reduce");
  std::size_t n = parts[0]->size();
  for (const auto* p : parts) {
    if (p->size() != n) throw std::runtime_error("all_reduce: gradient length mismatch");
  }
  // Fixed summation order (node 0, 1, ...) for bit-reproducibility.
  std::vector<double> out(*parts[0]);
  for (std::size_t k = 1; k < parts.size(); ++k) {
    const std::vector<double>& g = *parts[k];
    for (std::size_t i = 0; i < n; ++i) out[i] += g[i];
  }
  double inv = 1.0 / static_cast<double>(parts.size());
  for (double& v : out) v *= inv;
  return out;
}

namespace {

Gradients mean_gradients(const std::vector<const Gradients*>& parts) {
  std::vector<const std::vector<double>*> actor, c1, c2;
  for (const Gradients* g : parts) {
    actor.push_back(&g->actor);
    c1.push_back(&g->critic1);
    c2.push_back(&g->critic2);
  }
  Gradients out;
  out.actor = all_reduce_mean(actor);
  out.critic1 = all_reduce_mean(c1);
  out.critic2 = all_reduce_mean(c2);
  double inv = 1.0 / static_cast<double>(parts.size());
  for (const Gradients* g : parts) {
    out.log_temperature += g->log_temperature;
    out.stats.critic_loss += g->stats.critic_loss;
    out.stats.actor_loss += g->stats.actor_loss;
    out.stats.mean_log_pi += g->stats.mean_log_pi;
    out.stats.mean_q += g->stats.mean_q;
  }
  out.log_temperature *= inv;
  out.stats.critic_loss *= inv;
  out.stats.actor_loss *= inv;
  out.stats.mean_log_pi *= inv;
  out.stats.mean_q *= inv;
  return out;
}

}  // namespace

struct AllReducer::Impl {
  int k;
  std::mutex mu;
  std::condition_variable cv;
  std::vector<const Gradients*> slots;
  int arrived = 0;
  std::uint64_t generation = 0;
  Gradients result;
  bool dead = false;

  explicit Impl(int k_) : k(k_), slots(k_, nullptr) {}
};

AllReducer::AllReducer(int k) : impl_(std::make_unique<Impl>(k)) {
  if (k < 1) throw std::invalid_argument("AllReducer: k must be >= 1");
}
AllReducer::~AllReducer() = default;

Gradients AllReducer::reduce(int node, const Gradients& local) {
  Impl& s = *impl_;
  std::unique_lock lock(s.mu);
  if (s.dead) throw std::runtime_error("all-reduce: peer lost");
  s.slots[node] = &local;
  std::uint64_t my_gen = s.generation;
  if (++s.arrived == s.k) {
    std::vector<const Gradients*> parts(s.slots.begin(), s.slots.end());
    s.result = mean_gradients(parts);
    s.arrived = 0;
    std::fill(s.slots.begin(), s.slots.end(), nullptr);
    ++s.generation;
    s.cv.notify_all();
    return s.result;
  }
  s.cv.wait(lock, [&] { return s.generation != my_gen || s.dead; });
  if (s.generation == my_gen && s.dead) throw std::runtime_error("all-reduce: peer lost");
  return s.result;
}

void AllReducer::leave(int node) {
  Impl& s = *impl_;
  std::lock_guard lock(s.mu);
  (void)node;
  // Only fatal when peers are still waiting for this node's contribution.
  if (s.arrived > 0) {
    s.dead = true;
    s.cv.notify_all();
  }
}

namespace {

/// Termination and pacing arithmetic shared by both schedules.
class Coordinator {
 public:
  Coordinator(std::int64_t target_steps, double utd, std::int64_t min_data, bool free_run,
              std::int64_t start_steps, std::int64_t start_updates)
      : target_(target_steps),
        utd_(utd),
        min_data_(min_data),
        free_run_(free_run),
        reserved_(start_steps),
        inserted_(start_steps),
        base_updates_(start_updates) {}

  bool reserve_step() {
    std::lock_guard lock(mu_);
    if (stopped_ || reserved_ >= target_) return false;
    ++reserved_;
    return true;
  }

  void on_insert() {
    std::lock_guard lock(mu_);
    ++inserted_;
    cv_.notify_all();
  }

  void wake() {
    std::lock_guard lock(mu_);
    cv_.notify_all();
  }

  std::int64_t inserted() const {
    std::lock_guard lock(mu_);
    return inserted_;
  }

  std::int64_t budget_locked() const {
    if (free_run_) {
      return inserted_ >= min_data_ ? std::numeric_limits<std::int64_t>::max() : base_updates_;
    }
    double post = static_cast<double>(std::max<std::int64_t>(0, inserted_ - min_data_));
    return base_updates_ + static_cast<std::int64_t>(post * utd_);
  }

  /// Blocks until round `r` is funded. False: no further rounds will be.
  bool acquire_round(std::int64_t r) {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] {
      return stopped_ || r < budget_locked() || (inserted_ >= target_ && r >= budget_locked());
    });
    if (stopped_) return false;
    return r < budget_locked();
  }

  /// Non-blocking variant for the lockstep schedule.
  bool round_available(std::int64_t r) {
    std::lock_guard lock(mu_);
    return !stopped_ && r < budget_locked();
  }

  void stop(const std::string& error) {
    std::lock_guard lock(mu_);
    stopped_ = true;
    if (!error.empty() && error_.empty()) error_ = error;
    cv_.notify_all();
  }

  bool stopped() const {
    std::lock_guard lock(mu_);
    return stopped_;
  }
  std::string error() const {
    std::lock_guard lock(mu_);
    return error_;
  }

 private:
  std::int64_t target_;
  double utd_;
  std::int64_t min_data_;
  bool free_run_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::int64_t reserved_ = 0;
  std::int64_t inserted_ = 0;
  std::int64_t base_updates_ = 0;
  bool stopped_ = false;
  std::string error_;
};

/// Environment-side episode bookkeeping, identical under every schedule.
class EnvNode {
 public:
  EnvNode(std::unique_ptr<rl::RolloutEnv> env, int index, std::uint64_t run_seed,
          const TrainHooks* hooks)
      : env_(std::move(env)),
        index_(index),
        seed_base_(derive_seed(run_seed, "env", static_cast<std::uint64_t>(index))),
        hooks_(hooks) {
    reset();
  }

  const Observation& current() const { return obs_; }

  Transition apply(const std::vector<double>& action) {
    rl::StepResult r = env_->step(action);
    Transition tr{obs_, action, r.reward, r.obs, r.done};
    obs_ = r.obs;
    episode_reward_ += r.reward;
    ++episode_steps_;
    ++produced_;
    if (r.done || r.truncated) {
      if (hooks_ && hooks_->on_episode) {
        hooks_->on_episode(EpisodeStats{index_, episode_, episode_seed_, episode_steps_,
                                        episode_reward_});
      }
      ++episode_;
      reset();
    }
    return tr;
  }

  std::uint64_t produced() const { return produced_; }

 private:
  void reset() {
    episode_seed_ = derive_seed(seed_base_, "episode", static_cast<std::uint64_t>(episode_));
    obs_ = env_->reset(episode_seed_);
    episode_steps_ = 0;
    episode_reward_ = 0.0;
  }

  std::unique_ptr<rl::RolloutEnv> env_;
  int index_;
  std::uint64_t seed_base_;
  const TrainHooks* hooks_;
  Observation obs_;
  std::int64_t episode_ = 0;
  std::uint64_t episode_seed_ = 0;
  int episode_steps_ = 0;
  double episode_reward_ = 0.0;
  std::uint64_t produced_ = 0;
};

/// Policy service: answers observations from its current snapshot, random
/// during warmup. Snapshots swap in only between inferences.
class ActorNode {
 public:
  using Override = std::function<std::vector<double>(const Observation&, int)>;

  ActorNode(const nn::NetSpec& spec, int action_dim, int index, std::uint64_t run_seed,
            int warmup, nn::ParamVector initial, const Override* override_policy = nullptr)
      : spec_(spec),
        action_dim_(action_dim),
        index_(index),
        warmup_(warmup),
        params_(std::move(initial)),
        override_(override_policy),
        explore_rng_(derive_seed(run_seed, "explore", static_cast<std::uint64_t>(index))),
        sample_rng_(derive_seed(run_seed, "actor", static_cast<std::uint64_t>(index))) {}

  std::vector<double> act(const Observation& obs, std::int64_t inserted_so_far) {
    ++served_;
    if (override_ && *override_) return (*override_)(obs, index_);
    if (inserted_so_far < warmup_) {
      std::vector<double> a(action_dim_);
      for (double& v : a) v = explore_rng_.uniform(-1.0, 1.0);
      return a;
    }
    nn::ActorEval eval = nn::eval_actor(spec_, params_, obs);
    return nn::sample_squashed(eval.mean, eval.log_std, sample_rng_).action;
  }

  void adopt(const ParamSnapshot& snap) {
    if (snap.version <= version_) return;  // stale or duplicate
    params_ = snap.actor;
    version_ = snap.version;
  }

  std::uint64_t version() const { return version_; }
  std::uint64_t served() const { return served_; }

 private:
  nn::NetSpec spec_;
  int action_dim_;
  int index_ = 0;
  int warmup_;
  nn::ParamVector params_;
  const Override* override_ = nullptr;
  std::uint64_t version_ = 0;
  Rng explore_rng_;
  Rng sample_rng_;
  std::uint64_t served_ = 0;
};

/// One optimizer replica: local draws and gradient computation.
class OptimizerCore {
 public:
  OptimizerCore(LearnerState learner, int index, std::uint64_t run_seed,
                const rl::SACConfig* cfg,
                const std::function<void(std::vector<Transition>&, Rng&)>* augment)
      : learner_(std::move(learner)),
        cfg_(cfg),
        augment_(augment),
        rng_(derive_seed(run_seed, "optimizer", static_cast<std::uint64_t>(index))) {}

  Gradients local_gradients(const ReplayBuffer& buffer) {
    BatchDraw draw = rl::draw_batch(buffer, cfg_->batch, learner_.spec.action_dim, rng_);
    if (augment_ && *augment_) (*augment_)(draw.batch, rng_);
    return rl::compute_gradients(learner_, draw, *cfg_);
  }

  void apply(const Gradients& g) { rl::apply_gradients(learner_, g, *cfg_); }

  LearnerState& learner() { return learner_; }

 private:
  LearnerState learner_;
  const rl::SACConfig* cfg_;
  const std::function<void(std::vector<Transition>&, Rng&)>* augment_;
  Rng rng_;
};

ParamSnapshot snapshot_of(const LearnerState& learner) {
  return ParamSnapshot{learner.param_version, learner.actor};
}

/// Post-apply digest exchange: every replica must hold identical bytes.
class DigestTable {
 public:
  explicit DigestTable(int k) : k_(k) {}

  /// Returns false on divergence. Entries retire once all K have checked in.
  bool check(std::int64_t round, std::uint64_t digest) {
    std::lock_guard lock(mu_);
    auto [it, fresh] = pending_.try_emplace(round, Entry{digest, 1});
    if (fresh) return true;
    if (it->second.digest != digest) return false;
    if (++it->second.seen == k_) pending_.erase(it);
    return true;
  }

 private:
  struct Entry {
    std::uint64_t digest;
    int seen;
  };
  int k_;
  std::mutex mu_;
  std::map<std::int64_t, Entry> pending_;
};

TrainHooks wrap_hooks(const TrainHooks& raw, std::mutex& mu) {
  TrainHooks out = raw;
  if (raw.on_episode) {
    out.on_episode = [&mu, fn = raw.on_episode](const EpisodeStats& s) {
      std::lock_guard lock(mu);
      fn(s);
    };
  }
  if (raw.on_update) {
    out.on_update = [&mu, fn = raw.on_update](std::int64_t u, const rl::UpdateStats& s, double t) {
      std::lock_guard lock(mu);
      fn(u, s, t);
    };
  }
  if (raw.on_checkpoint) {
    out.on_checkpoint = [&mu, fn = raw.on_checkpoint](const LearnerState& l, std::int64_t u) {
      std::lock_guard lock(mu);
      fn(l, u);
    };
  }
  if (raw.on_stats) {
    out.on_stats = [&mu, fn = raw.on_stats](const NodeStats& s) {
      std::lock_guard lock(mu);
      fn(s);
    };
  }
  return out;
}

TrainResult run_lockstep(const DistTrainSpec& spec, const TrainHooks& hooks) {
  const Topology& topo = spec.topology;
  std::int64_t start_updates = 0;
  LearnerState init = spec.resume_from ? *spec.resume_from
                                       : rl::make_learner(spec.net, spec.sac, spec.seed);
  if (spec.resume_from) start_updates = spec.resume_from->updates;

  ReplayBuffer buffer(spec.sac.buffer_capacity);
  std::int64_t min_data =
      std::max<std::int64_t>(spec.sac.warmup_steps, spec.sac.batch) + spec.resume_env_steps;
  Coordinator coord(spec.total_env_steps, spec.sac.utd, min_data, topo.free_run,
                    spec.resume_env_steps, start_updates);

  std::vector<EnvNode> envs;
  std::vector<ActorNode> actors;
  for (int i = 0; i < topo.n_envs; ++i) {
    envs.emplace_back(spec.make_env(i), i, spec.seed, &hooks);
    actors.emplace_back(spec.net, spec.net.action_dim, i, spec.seed,
                        spec.sac.warmup_steps + static_cast<int>(spec.resume_env_steps),
                        init.actor, &spec.policy_override);
  }
  std::vector<OptimizerCore> optimizers;
  for (int k = 0; k < topo.k_optimizers; ++k) {
    optimizers.emplace_back(init, k, spec.seed, &spec.sac, &spec.batch_augment);
  }

  std::int64_t rounds = start_updates;
  std::int64_t digest_rounds = 0;
  auto run_round = [&] {
    std::vector<Gradients> locals;
    locals.reserve(optimizers.size());
    for (OptimizerCore& opt : optimizers) locals.push_back(opt.local_gradients(buffer));
    std::vector<const Gradients*> parts;
    for (const Gradients& g : locals) parts.push_back(&g);
    Gradients avg = mean_gradients(parts);
    for (OptimizerCore& opt : optimizers) opt.apply(avg);
    ++rounds;
    if (optimizers.size() > 1) {
      std::uint64_t expect = optimizers[0].learner().digest();
      for (std::size_t k = 1; k < optimizers.size(); ++k) {
        if (optimizers[k].learner().digest() != expect) {
          throw std::runtime_error("replica divergence after all-reduce apply");
        }
      }
      ++digest_rounds;
    }
    if (hooks.on_update) {
      hooks.on_update(rounds, avg.stats, optimizers[0].learner().temperature());
    }
    if (hooks.on_checkpoint && hooks.checkpoint_period > 0 &&
        rounds % hooks.checkpoint_period == 0) {
      hooks.on_checkpoint(optimizers[0].learner(), rounds);
    }
    if (rounds % topo.broadcast_period == 0) {
      ParamSnapshot snap = snapshot_of(optimizers[0].learner());
      for (ActorNode& a : actors) a.adopt(snap);
    }
  };

  bool progressing = true;
  while (progressing) {
    progressing = false;
    for (int i = 0; i < topo.n_envs; ++i) {
      if (!coord.reserve_step()) continue;
      progressing = true;
      Transition tr = envs[i].apply(actors[i].act(envs[i].current(), coord.inserted()));
      if (hooks.on_transition) hooks.on_transition(tr, i);
      buffer.insert(std::move(tr));
      coord.on_insert();
      while (coord.round_available(rounds)) run_round();
    }
  }
  while (coord.round_available(rounds)) run_round();

  TrainResult result;
  result.learner = optimizers[0].learner();
  result.env_steps = coord.inserted();
  result.updates = rounds;
  result.digest_rounds_verified = digest_rounds;
  for (const ActorNode& a : actors) result.final_actor_versions.push_back(a.version());
  return result;
}

TrainResult run_async(const DistTrainSpec& spec, const TrainHooks& hooks) {
  const Topology& topo = spec.topology;
  std::int64_t start_updates = 0;
  LearnerState init = spec.resume_from ? *spec.resume_from
                                       : rl::make_learner(spec.net, spec.sac, spec.seed);
  if (spec.resume_from) start_updates = spec.resume_from->updates;

  ReplayBuffer buffer(spec.sac.buffer_capacity);
  std::int64_t min_data =
      std::max<std::int64_t>(spec.sac.warmup_steps, spec.sac.batch) + spec.resume_env_steps;
  Coordinator coord(spec.total_env_steps, spec.sac.utd, min_data, topo.free_run,
                    spec.resume_env_steps, start_updates);

  struct Pair {
    std::unique_ptr<Channel<Stamped<Observation>>> obs_ch;
    std::unique_ptr<Channel<Stamped<std::vector<double>>>> act_ch;
    Mailbox<std::shared_ptr<const ParamSnapshot>> snapshots;
    std::atomic<std::uint64_t> actor_version{0};
    std::atomic<std::uint64_t> env_steps{0};
    std::atomic<std::uint64_t> actor_served{0};
  };
  std::vector<std::unique_ptr<Pair>> pairs;
  for (int i = 0; i < topo.n_envs; ++i) {
    auto p = std::make_unique<Pair>();
    p->obs_ch = std::make_unique<Channel<Stamped<Observation>>>(topo.channel_capacity);
    p->act_ch = std::make_unique<Channel<Stamped<std::vector<double>>>>(topo.channel_capacity);
    pairs.push_back(std::move(p));
  }
  Channel<Stamped<std::vector<Transition>>> ingest(
      static_cast<std::size_t>(topo.channel_capacity) * topo.n_envs);
  AllReducer reducer(topo.k_optimizers);
  DigestTable digests(topo.k_optimizers);
  std::atomic<std::int64_t> digest_rounds{0};
  std::atomic<std::uint64_t> latest_version{init.param_version};
  std::atomic<std::uint64_t> rounds_done{static_cast<std::uint64_t>(start_updates)};

  std::vector<OptimizerCore> optimizers;
  for (int k = 0; k < topo.k_optimizers; ++k) {
    optimizers.emplace_back(init, k, spec.seed, &spec.sac, &spec.batch_augment);
  }

  std::vector<std::thread> threads;
  std::atomic<bool> stats_running{true};

  // Environment nodes: send observation, await action, step, ship transition.
  for (int i = 0; i < topo.n_envs; ++i) {
    threads.emplace_back([&, i] {
      try {
        EnvNode env(spec.make_env(i), i, spec.seed, &hooks);
        Pair& pair = *pairs[i];
        std::uint64_t obs_seq = 0, tr_seq = 0;
        while (coord.reserve_step()) {
          if (!pair.obs_ch->send({obs_seq++, i, env.current()})) break;
          std::optional<Stamped<std::vector<double>>> act = pair.act_ch->recv();
          if (!act) break;
          Transition tr = env.apply(act->payload);
          pair.env_steps.fetch_add(1, std::memory_order_relaxed);
          if (!ingest.send({tr_seq++, i, {std::move(tr)}})) break;
        }
        pair.obs_ch->close();
      } catch (const std::exception& e) {
        coord.stop(std::string("env node: ") + e.what());
        pairs[i]->obs_ch->close();
      }
    });
  }

  // Actor nodes: answer observations from the freshest adopted snapshot.
  for (int i = 0; i < topo.n_envs; ++i) {
    threads.emplace_back([&, i] {
      try {
        Pair& pair = *pairs[i];
        ActorNode actor(spec.net, spec.net.action_dim, i, spec.seed,
                        spec.sac.warmup_steps + static_cast<int>(spec.resume_env_steps),
                        init.actor, &spec.policy_override);
        std::uint64_t act_seq = 0, last_obs_seq = 0;
        bool first = true;
        while (true) {
          std::optional<Stamped<Observation>> obs = pair.obs_ch->recv();
          if (!obs) break;
          if (!first && obs->seq <= last_obs_seq) {
            throw std::logic_error("actor: observation sequence ids must increase");
          }
          last_obs_seq = obs->seq;
          first = false;
          if (auto snap = pair.snapshots.take()) actor.adopt(**snap);
          std::vector<double> a = actor.act(obs->payload, coord.inserted());
          pair.actor_version.store(actor.version(), std::memory_order_relaxed);
          pair.actor_served.fetch_add(1, std::memory_order_relaxed);
          if (!pair.act_ch->send({act_seq++, i, std::move(a)})) break;
        }
        pair.act_ch->close();
      } catch (const std::exception& e) {
        coord.stop(std::string("actor node: ") + e.what());
        pairs[i]->act_ch->close();
      }
    });
  }

  // Replay ingest service: the only writer into the shared buffer.
  std::thread ingest_thread([&] {
    try {
      while (auto msg = ingest.recv()) {
        for (Transition& tr : msg->payload) {
          if (hooks.on_transition) hooks.on_transition(tr, msg->sender);
          buffer.insert(std::move(tr));
          coord.on_insert();
        }
      }
    } catch (const std::exception& e) {
      coord.stop(std::string("replay ingest: ") + e.what());
    }
  });

  // Optimizer nodes: sample, differentiate, all-reduce, apply, broadcast.
  std::vector<std::thread> opt_threads;
  for (int k = 0; k < topo.k_optimizers; ++k) {
    opt_threads.emplace_back([&, k] {
      OptimizerCore& core = optimizers[k];
      std::int64_t rounds = start_updates;
      try {
        while (coord.acquire_round(rounds)) {
          Gradients local = core.local_gradients(buffer);
          Gradients avg = reducer.reduce(k, local);
          core.apply(avg);
          ++rounds;
          if (topo.k_optimizers > 1) {
            if (!digests.check(rounds, core.learner().digest())) {
              throw std::runtime_error("replica divergence after all-reduce apply");
            }
            if (k == 0) digest_rounds.fetch_add(1, std::memory_order_relaxed);
          }
          if (k == 0) {
            rounds_done.store(static_cast<std::uint64_t>(rounds), std::memory_order_relaxed);
            if (hooks.on_update) hooks.on_update(rounds, avg.stats, core.learner().temperature());
            if (hooks.on_checkpoint && hooks.checkpoint_period > 0 &&
                rounds % hooks.checkpoint_period == 0) {
              hooks.on_checkpoint(core.learner(), rounds);
            }
            if (rounds % topo.broadcast_period == 0) {
              auto snap = std::make_shared<const ParamSnapshot>(snapshot_of(core.learner()));
              latest_version.store(snap->version, std::memory_order_relaxed);
              for (auto& pair : pairs) pair->snapshots.put(snap);
            }
          }
        }
        reducer.leave(k);
      } catch (const std::exception& e) {
        coord.stop(std::string("optimizer node: ") + e.what());
        reducer.leave(k);
      }
    });
  }

  // Periodic NodeStats emission.
  std::thread stats_thread;
  if (hooks.on_stats) {
    stats_thread = std::thread([&] {
      std::vector<std::uint64_t> prev_env(topo.n_envs, 0), prev_act(topo.n_envs, 0);
      std::uint64_t prev_rounds = 0;
      while (stats_running.load()) {
        std::this_thread::sleep_for(std::chrono::duration<double>(hooks.stats_period_s));
        if (!stats_running.load()) break;
        for (int i = 0; i < topo.n_envs; ++i) {
          Pair& pair = *pairs[i];
          std::uint64_t env_total = pair.env_steps.load(std::memory_order_relaxed);
          std::uint64_t act_total = pair.actor_served.load(std::memory_order_relaxed);
          std::uint64_t ver = pair.actor_version.load(std::memory_order_relaxed);
          NodeStats env_stats{"env:" + std::to_string(i), env_total,
                              (env_total - prev_env[i]) / hooks.stats_period_s, 0, 0,
                              pair.obs_ch->depth()};
          NodeStats act_stats{"actor:" + std::to_string(i), act_total,
                              (act_total - prev_act[i]) / hooks.stats_period_s, ver,
                              latest_version.load(std::memory_order_relaxed) - ver,
                              pair.act_ch->depth()};
          hooks.on_stats(env_stats);
          hooks.on_stats(act_stats);
          prev_env[i] = env_total;
          prev_act[i] = act_total;
        }
        std::uint64_t rd = rounds_done.load(std::memory_order_relaxed);
        hooks.on_stats(NodeStats{"optimizer:0", rd, (rd - prev_rounds) / hooks.stats_period_s, 0,
                                 0, ingest.depth()});
        prev_rounds = rd;
      }
    });
  }

  for (std::size_t i = 0; i < threads.size(); ++i) threads[i].join();  // envs then actors
  ingest.close();
  ingest_thread.join();
  coord.wake();  // final wake so optimizers observe the frozen budget
  for (std::thread& t : opt_threads) t.join();
  stats_running.store(false);
  if (stats_thread.joinable()) stats_thread.join();

  if (!coord.error().empty()) {
    throw std::runtime_error("distributed training aborted: " + coord.error());
  }

  TrainResult result;
  result.learner = optimizers[0].learner();
  result.env_steps = coord.inserted();
  result.updates = static_cast<std::int64_t>(optimizers[0].learner().updates);
  result.digest_rounds_verified = digest_rounds.load();
  for (auto& pair : pairs) {
    result.final_actor_versions.push_back(pair->actor_version.load(std::memory_order_relaxed));
  }
  return result;
}

}  // namespace

TrainResult train_distributed(const DistTrainSpec& spec) {
  spec.topology.validate();
  spec.sac.validate();
  if (spec.total_env_steps <= spec.resume_env_steps) {
    throw std::invalid_argument("train_distributed: nothing to do");
  }
  std::mutex hook_mu;
  TrainHooks hooks = wrap_hooks(spec.hooks, hook_mu);

  std::vector<EpisodeStats> episodes;
  std::function<void(const EpisodeStats&)> user_episode = hooks.on_episode;
  hooks.on_episode = [&episodes, user_episode](const EpisodeStats& s) {
    episodes.push_back(s);
    if (user_episode) user_episode(s);
  };

  TrainResult result = spec.topology.lockstep ? run_lockstep(spec, hooks) : run_async(spec, hooks);
  result.episodes = std::move(episodes);
  return result;
}

TrainResult train_reference(const DistTrainSpec& spec) {
  spec.sac.validate();
  std::mutex hook_mu;
  TrainHooks hooks = wrap_hooks(spec.hooks, hook_mu);

  std::vector<EpisodeStats> episodes;
  std::function<void(const EpisodeStats&)> user_episode = hooks.on_episode;
  hooks.on_episode = [&episodes, user_episode](const EpisodeStats& s) {
    episodes.push_back(s);
    if (user_episode) user_episode(s);
  };

  std::int64_t start_updates = 0;
  LearnerState init = spec.resume_from ? *spec.resume_from
                                       : rl::make_learner(spec.net, spec.sac, spec.seed);
  if (spec.resume_from) start_updates = spec.resume_from->updates;

  ReplayBuffer buffer(spec.sac.buffer_capacity);
  std::int64_t min_data =
      std::max<std::int64_t>(spec.sac.warmup_steps, spec.sac.batch) + spec.resume_env_steps;
  Coordinator coord(spec.total_env_steps, spec.sac.utd, min_data, spec.topology.free_run,
                    spec.resume_env_steps, start_updates);

  EnvNode env(spec.make_env(0), 0, spec.seed, &hooks);
  ActorNode actor(spec.net, spec.net.action_dim, 0, spec.seed,
                  spec.sac.warmup_steps + static_cast<int>(spec.resume_env_steps), init.actor);
  OptimizerCore core(init, 0, spec.seed, &spec.sac, &spec.batch_augment);

  std::int64_t rounds = start_updates;
  while (coord.reserve_step()) {
    Transition tr = env.apply(actor.act(env.current(), coord.inserted()));
    if (hooks.on_transition) hooks.on_transition(tr, 0);
    buffer.insert(std::move(tr));
    coord.on_insert();
    while (coord.round_available(rounds)) {
      Gradients local = core.local_gradients(buffer);
      std::vector<const Gradients*> parts{&local};
      Gradients avg = mean_gradients(parts);  // K = 1: degenerate all-reduce
      core.apply(avg);
      ++rounds;
      if (hooks.on_update) hooks.on_update(rounds, avg.stats, core.learner().temperature());
      if (hooks.on_checkpoint && hooks.checkpoint_period > 0 &&
          rounds % hooks.checkpoint_period == 0) {
        hooks.on_checkpoint(core.learner(), rounds);
      }
      if (rounds % spec.topology.broadcast_period == 0) {
        actor.adopt(snapshot_of(core.learner()));
      }
    }
  }

  TrainResult result;
  result.learner = core.learner();
  result.env_steps = coord.inserted();
  result.updates = rounds;
  result.episodes = std::move(episodes);
  return result;
}

}  // namespace lanerl::dist
