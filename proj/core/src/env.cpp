#include "lanerl/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lanerl::rl {

LaneWorldEnv::LaneWorldEnv(LaneWorldConfig cfg, std::uint64_t stream_seed)
    : cfg_(std::move(cfg)), stream_(stream_seed) {
  if (cfg_.maps.empty()) throw std::invalid_argument("LaneWorldEnv: no maps configured");
  cfg_.randomize.map_count = static_cast<int>(cfg_.maps.size());
  cfg_.reward.validate();
}

Observation LaneWorldEnv::reset(std::uint64_t seed) {
  sim::EpisodeDraw draw = sim::randomize_episode(cfg_.randomize, seed);
  map_index_ = draw.map_index % static_cast<int>(cfg_.maps.size());
  vehicle_ = draw.vehicle;
  camera_ = draw.camera;
  obstacles_ = sim::Obstacle::from_specs(map().obstacles);

  const geom::Polyline& route = map().route().centerline;
  Rng start_rng(derive_seed(seed, "start-pose"));
  double lateral = start_rng.uniform(-cfg_.start_lateral_jitter, cfg_.start_lateral_jitter);
  double dheading = start_rng.uniform(-cfg_.start_heading_jitter, cfg_.start_heading_jitter);
  geom::Vec2 base = route.at(cfg_.start_s);
  double heading = route.heading_at(cfg_.start_s);
  geom::Vec2 normal{-std::sin(heading), std::cos(heading)};
  state_ = sim::VehicleState{base.x + normal.x * lateral, base.y + normal.y * lateral,
                             geom::wrap_angle(heading + dheading), 0.0};
  steps_ = 0;
  stationary_ = 0;
  return observe();
}

Observation LaneWorldEnv::observe() const {
  return sim::render_semantic(map(), state_, vehicle_, obstacles_, camera_, cfg_.render);
}

StepResult LaneWorldEnv::step(const std::vector<double>& action) {
  if (action.size() != 2) throw std::invalid_argument("LaneWorldEnv: action must be 2-D");
  Action a{action[0], action[1]};
  sim::VehicleState prev = state_;
  state_ = sim::step(prev, a, vehicle_, cfg_.dt);
  for (sim::Obstacle& ob : obstacles_) ob.advance(cfg_.dt);

  sim::StepEvents events =
      sim::detect_events(prev, state_, vehicle_, map(), obstacles_, stationary_);
  stationary_ = events.stationary_steps;
  sim::LaneMeasurement lane = sim::measure_lane(state_, map(), cfg_.reward.d_max);

  StepResult result;
  double v = std::min(state_.speed, cfg_.reward.v_max);
  double d = std::min(lane.distance, cfg_.reward.d_max);
  result.reward = reward::total_reward(v, d, lane.heading_error, events, cfg_.reward);
  result.done = events.collision;
  ++steps_;
  bool route_done = lane.lane_id == map().route_lane &&
                    lane.lane_s >= map().route_length() - 0.5 * map().route().width;
  result.truncated = !result.done && (steps_ >= cfg_.max_steps || route_done);
  result.obs = observe();
  return result;
}

Observation PointMassEnv::reset(std::uint64_t seed) {
  Rng rng(mix64(seed));
  x_ = rng.uniform(-cfg_.start_range, cfg_.start_range);
  v_ = 0.0;
  steps_ = 0;
  return observe();
}

Observation PointMassEnv::observe() const {
  Observation obs;
  obs.vec = {x_, v_};
  return obs;
}

StepResult PointMassEnv::step(const std::vector<double>& action) {
  if (action.size() != 1) throw std::invalid_argument("PointMassEnv: action must be 1-D");
  double u = std::clamp(action[0], -1.0, 1.0);
  v_ += cfg_.dt * (cfg_.force_gain * u - cfg_.drag * v_);
  x_ += cfg_.dt * v_;
  ++steps_;

  StepResult result;
  result.reward = std::clamp(1.0 - x_ * x_ - 0.05 * v_ * v_, 0.0, 1.0);
  result.done = false;
  result.truncated = steps_ >= cfg_.max_steps;
  result.obs = observe();
  return result;
}

double PointMassEnv::oracle_policy(double x, double v) {
  return std::clamp(-2.0 * x - 1.2 * v, -1.0, 1.0);
}

}  // namespace lanerl::rl
