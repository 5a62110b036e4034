#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "lanerl/observe.hpp"
#include "lanerl/reward.hpp"
#include "lanerl/rng.hpp"
#include "lanerl/simworld.hpp"

namespace lanerl::rl {

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool done = false;       // true terminal (collision); target bootstrap stops
  bool truncated = false;  // time limit or route end; bootstrap continues
};

/// Episodic environment driven by the trainer and the benchmark harness.
class RolloutEnv {
 public:
  virtual ~RolloutEnv() = default;
  virtual Observation reset(std::uint64_t seed) = 0;
  virtual StepResult step(const std::vector<double>& action) = 0;
  virtual int action_dim() const = 0;
};

using EnvFactory = std::function<std::unique_ptr<RolloutEnv>(int env_index)>;

/// Training-side lane world: domain randomization per episode, clean
/// ground-truth rendering, shaped reward, collision terminals.
struct LaneWorldConfig {
  std::vector<sim::RoadMap> maps;
  sim::RenderConfig render;
  sim::RandomizationConfig randomize;
  reward::RewardConfig reward;
  double dt = 0.1;
  int max_steps = 600;
  double start_lateral_jitter = 0.3;   // m
  double start_heading_jitter = 0.15;  // rad
  double start_s = 1.0;                // m along the route
};

class LaneWorldEnv : public RolloutEnv {
 public:
  LaneWorldEnv(LaneWorldConfig cfg, std::uint64_t stream_seed);

  Observation reset(std::uint64_t seed) override;
  StepResult step(const std::vector<double>& action) override;
  int action_dim() const override { return 2; }

  const sim::VehicleState& state() const { return state_; }
  const sim::RoadMap& map() const { return cfg_.maps[map_index_]; }
  const sim::VehicleParams& vehicle() const { return vehicle_; }

 private:
  LaneWorldConfig cfg_;
  Rng stream_;
  int map_index_ = 0;
  sim::VehicleParams vehicle_;
  sim::CameraJitter camera_;
  std::vector<sim::Obstacle> obstacles_;
  sim::VehicleState state_;
  int steps_ = 0;
  int stationary_ = 0;

  Observation observe() const;
};

/// 1-D point mass: state (position, velocity), one bounded force action,
/// dense reward peaking at the origin. Vector observations.
struct PointMassConfig {
  double dt = 0.05;
  double force_gain = 2.0;
  double drag = 0.1;
  int max_steps = 200;
  double start_range = 1.5;
};

class PointMassEnv : public RolloutEnv {
 public:
  explicit PointMassEnv(PointMassConfig cfg = {}) : cfg_(cfg) {}

  Observation reset(std::uint64_t seed) override;
  StepResult step(const std::vector<double>& action) override;
  int action_dim() const override { return 1; }

  double position() const { return x_; }
  double velocity() const { return v_; }

  /// Scripted stabilizing feedback used as the oracle return baseline.
  static double oracle_policy(double x, double v);

 private:
  PointMassConfig cfg_;
  double x_ = 0.0;
  double v_ = 0.0;
  int steps_ = 0;

  Observation observe() const;
};

}  // namespace lanerl::rl
