#include "lanerl/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lanerl::reward {

void RewardConfig::validate() const {
  if (!(0.0 < v_min && v_min <= v_target && v_target < v_max)) {
    throw std::invalid_argument("RewardConfig: need 0 < v_min <= v_target < v_max");
  }
  if (!(d_max > 0.0)) throw std::invalid_argument("RewardConfig: d_max must be positive");
  if (!(alpha_max > 0.0 && alpha_max <= geom::kPi)) {
    throw std::invalid_argument("RewardConfig: alpha_max must lie in (0, pi]");
  }
  if (w_collision < 0.0 || w_solid < 0.0 || w_double_solid < 0.0) {
    throw std::invalid_argument("RewardConfig: penalty weights must be non-negative");
  }
}

double speed_reward(double v, const RewardConfig& cfg) {
  if (!(v >= 0.0 && v <= cfg.v_max)) {
    throw std::invalid_argument("speed_reward: v outside [0, v_max]");
  }
  if (v < cfg.v_min) return v / cfg.v_min;
  if (v <= cfg.v_target) return 1.0;
  return 1.0 - (v - cfg.v_target) / (cfg.v_max - cfg.v_target);
}

double center_reward(double d, const RewardConfig& cfg) {
  if (!(d >= 0.0)) throw std::invalid_argument("center_reward: d must be non-negative");
  return std::clamp(1.0 - d / cfg.d_max, 0.0, 1.0);
}

double heading_reward(double alpha, const RewardConfig& cfg) {
  if (!(alpha >= 0.0 && alpha <= geom::kPi)) {
    throw std::invalid_argument("heading_reward: alpha outside [0, pi]");
  }
  return std::clamp(1.0 - alpha / cfg.alpha_max, 0.0, 1.0);
}

double penalty(const sim::StepEvents& events, const RewardConfig& cfg) {
  return cfg.w_collision * (events.collision ? 1.0 : 0.0) +
         cfg.w_solid * (events.crossed_solid ? 1.0 : 0.0) +
         cfg.w_double_solid * (events.crossed_double_solid ? 1.0 : 0.0);
}

double total_reward(double v, double d, double alpha, const sim::StepEvents& events,
                    const RewardConfig& cfg) {
  return speed_reward(v, cfg) * center_reward(d, cfg) * heading_reward(alpha, cfg) -
         penalty(events, cfg);
}

}  // namespace lanerl::reward
