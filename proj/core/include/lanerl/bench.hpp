#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lanerl/control.hpp"
#include "lanerl/episode.hpp"
#include "lanerl/observe.hpp"
#include "lanerl/reward.hpp"

namespace lanerl::bench {

/// Which sim2real axes are switched on for an evaluation condition.
struct GapConfig {
  bool visual = false;    // degraded test-mode rendering reaches raw consumers
  bool dynamics = false;  // vehicle parameters redrawn per episode from the test set
  bool scenario = false;  // held-out map (selected by the caller)
};

/// What the policy sees: ideal-perception semantics (clean, ego-centered)
/// or the raw rendering, which carries the visual gap at test time.
enum class ObsSource { kSemantic, kRaw };

/// Everything a policy may look at. Learned policies read `obs`; privileged
/// baselines (the scripted expert) read the simulator state directly.
struct PolicyContext {
  const Observation& obs;
  const sim::VehicleState& state;
  const sim::RoadMap& map;
  const std::vector<sim::Obstacle>& obstacles;
  const sim::VehicleParams& vehicle;
};
using Policy = std::function<Action(const PolicyContext&)>;

struct BenchConfig {
  sim::RenderConfig train_render;  // clean
  sim::RenderConfig test_render;   // degraded (set degrade = true)
  double test_camera_jitter_xy = 0.25;
  double test_camera_jitter_theta = 0.05;
  std::vector<sim::VehicleParams> train_vehicles = {sim::VehicleParams{}};
  std::vector<sim::VehicleParams> test_vehicles = {sim::VehicleParams{}};
  reward::RewardConfig reward;
  ctrl::ControlChainConfig control;
  ObsSource obs_source = ObsSource::kSemantic;
  double dt = 0.1;
  int step_budget = 5000;
  int stationary_limit = 600;      // steps: one minute at the 100 ms interval
  double safe_reset_ahead = 2.0;   // m along the route after an intervention
  std::uint64_t config_digest = 0;  // recorded into logs

  BenchConfig() { test_render.degrade = true; }
};

/// Closed loop of render -> policy -> control chain -> plant step, with the
/// takeover protocol: collisions and one stationary minute trigger an
/// intervention, the vehicle teleports to the nearest safe in-lane pose
/// ahead, and the episode continues to route end or the step budget.
/// Non-finite policy actions count as interventions.
EpisodeLog run_episode(const Policy& policy, const sim::RoadMap& map, const GapConfig& gap,
                       const BenchConfig& cfg, std::uint64_t seed);

struct MpiResult {
  double meters_per_intervention = 0.0;  // total distance when unbounded
  bool unbounded = false;                // zero interventions: report "> distance"
  double total_distance = 0.0;
  int total_interventions = 0;

  std::string display() const;
};
/// Pooled over all logs: total driven distance / total interventions.
MpiResult compute_mpi(const std::vector<EpisodeLog>& logs);

/// Distance to the first intervention over the route length, in percent;
/// 100 when the log has no intervention.
double compute_sr(const EpisodeLog& log);

struct Smoothness {
  double std_steer_deg = 0.0;
  double std_speed = 0.0;
};
/// Population standard deviations of the applied steering angle (degrees)
/// and the speed.
Smoothness compute_smoothness(const EpisodeLog& log);

struct EpisodeRow {
  std::string map_name;
  std::uint64_t seed = 0;
  double distance = 0.0;
  int interventions = 0;
  double sr = 0.0;
  double std_steer_deg = 0.0;
  double std_speed = 0.0;
};

struct MetricsReport {
  MpiResult mpi;
  double sr_mean = 0.0;
  double std_steer_deg = 0.0;  // mean of per-episode values
  double std_speed = 0.0;
  int episode_count = 0;
  std::vector<EpisodeRow> rows;

  std::string table() const;  // human-readable
};
MetricsReport summarize(const std::vector<EpisodeLog>& logs);

/// Pure-pursuit lane follower with privileged map access and obstacle stop.
struct ExpertConfig {
  double lookahead_base = 1.2;   // m
  double lookahead_gain = 0.6;   // s (times speed)
  double lookahead_max = 4.0;    // m
  double cruise_fraction = 0.8;  // of v_target
  double speed_kp = 0.8;
  double obstacle_stop_range = 6.0;  // m along the route
};
Policy scripted_expert(const ExpertConfig& cfg, const reward::RewardConfig& reward_cfg);

struct EvalSuite {
  std::vector<const sim::RoadMap*> train_maps;
  const sim::RoadMap* test_map = nullptr;
  GapConfig test_gaps{true, true, true};
  int episodes_per_map = 2;
  std::uint64_t seed = 0;
  BenchConfig bench;
  int threads = 2;
};

struct NoGapResult {
  MetricsReport train_condition;
  MetricsReport test_condition;
  std::vector<EpisodeLog> train_logs;
  std::vector<EpisodeLog> test_logs;

  /// test MPI / train MPI (unbounded sides use their distance totals).
  double mpi_ratio() const;
};

/// Runs the full matrix: train rendering on the training maps versus the
/// test condition (held-out map, redrawn dynamics, degraded rendering for
/// raw-observation policies). Episodes fan out over threads and merge in
/// seed order, so reports are deterministic.
NoGapResult nogap_eval(const Policy& policy, const EvalSuite& suite);

}  // namespace lanerl::bench
