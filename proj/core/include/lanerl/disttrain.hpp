#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lanerl/env.hpp"
#include "lanerl/sac.hpp"

namespace lanerl::dist {

/// Node counts and message-exchange knobs of the asynchronous topology.
struct Topology {
  int n_envs = 1;          // environment/actor pairs
  int k_optimizers = 1;
  int channel_capacity = 8;
  int broadcast_period = 50;  // updates between parameter snapshots
  bool lockstep = false;      // serialize everything onto one deterministic schedule
  bool free_run = false;      // ignore update-to-data pacing (throughput probes)

  void validate() const;
};

/// Wire taxonomy carried by the in-process channels.
enum class MessageKind { kObservation, kAction, kTransitionBatch, kParameterSnapshot, kShutdown };

template <typename T>
struct Stamped {
  std::uint64_t seq = 0;  // strictly increasing per sender
  int sender = 0;
  T payload;
};

struct ParamSnapshot {
  std::uint64_t version = 0;
  nn::ParamVector actor;
};

struct NodeStats {
  std::string node;
  std::uint64_t items_total = 0;
  double items_per_sec = 0.0;
  std::uint64_t snapshot_version = 0;  // actors: version in use
  std::uint64_t staleness = 0;         // actors: broadcast version lag
  std::size_t queue_depth = 0;
};

struct EpisodeStats {
  int env_index = 0;
  std::int64_t episode = 0;
  std::uint64_t seed = 0;
  int steps = 0;
  double total_reward = 0.0;
};

struct TrainHooks {
  // Called from node contexts; implementations must be thread-safe in
  // asynchronous mode.
  std::function<void(const EpisodeStats&)> on_episode;
  std::function<void(const rl::Transition&, int env_index)> on_transition;
  std::function<void(std::int64_t updates, const rl::UpdateStats&, double temperature)> on_update;
  std::function<void(const rl::LearnerState&, std::int64_t updates)> on_checkpoint;
  std::int64_t checkpoint_period = 0;  // 0: no checkpoints
  std::function<void(const NodeStats&)> on_stats;
  double stats_period_s = 5.0;
};

struct DistTrainSpec {
  nn::NetSpec net;
  rl::SACConfig sac;
  Topology topology;
  rl::EnvFactory make_env;
  std::int64_t total_env_steps = 0;
  std::uint64_t seed = 0;
  /// Optional observation augmentation applied to sampled batches (both s
  /// and s'), drawing from the optimizer's stream.
  std::function<void(std::vector<rl::Transition>&, Rng&)> batch_augment;
  /// Scripted policy replacing the learned actor on every actor node
  /// (testing and data-collection probes).
  std::function<std::vector<double>(const Observation&, int env_index)> policy_override;
  TrainHooks hooks;
  /// Start from this learner instead of a fresh initialization (resume).
  std::shared_ptr<const rl::LearnerState> resume_from;
  std::int64_t resume_env_steps = 0;
};

struct TrainResult {
  rl::LearnerState learner;  // optimizer 0's copy
  std::int64_t env_steps = 0;
  std::int64_t updates = 0;
  std::vector<EpisodeStats> episodes;
  std::vector<std::uint64_t> final_actor_versions;  // snapshot version per actor
  /// Rounds whose post-apply replica digests were exchanged and matched
  /// (always on for k_optimizers > 1; divergence aborts the run).
  std::int64_t digest_rounds_verified = 0;
};

/// Deterministic in-order mean of per-node gradient vectors (the reduction
/// core of the all-reduce). Length mismatches abort with a diagnostic.
std::vector<double> all_reduce_mean(const std::vector<const std::vector<double>*>& parts);

/// Rendezvous all-reduce for K optimizer nodes: every participant receives
/// the identical elementwise mean (fixed summation order). If a peer leaves
/// mid-reduction the survivors' reduce() throws.
class AllReducer {
 public:
  explicit AllReducer(int k);
  ~AllReducer();
  rl::Gradients reduce(int node, const rl::Gradients& local);
  void leave(int node);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Runs the full topology: N environment/actor pairs feeding a shared replay
/// service, K data-parallel optimizers synchronized by all-reduce, delayed
/// parameter snapshot broadcasts. Asynchronous by default; lockstep mode
/// executes the identical per-node arithmetic on one deterministic schedule.
TrainResult train_distributed(const DistTrainSpec& spec);

/// Plain sequential trainer used as the equivalence reference: one env, one
/// learner, acting from a snapshot refreshed every `policy_refresh_period`
/// updates. With the same seed, lockstep {N=1, K=1, broadcast_period=p}
/// reproduces this bit for bit.
TrainResult train_reference(const DistTrainSpec& spec);

}  // namespace lanerl::dist
