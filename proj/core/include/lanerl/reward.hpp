#pragma once

#include "lanerl/simworld.hpp"

namespace lanerl::reward {

/// Thresholds and penalty weights of the shaped reward. Defaults are the
/// shipped configuration; all values are overridable from the run config and
/// recorded into every episode log.
struct RewardConfig {
  double v_min = 1.0;     // m/s
  double v_target = 5.0;  // m/s
  double v_max = 10.0;    // m/s
  double d_max = 1.75;    // m, half of the default lane width
  double alpha_max = geom::kPi / 2.0;  // rad
  double w_collision = 25.0;
  double w_solid = 12.0;
  double w_double_solid = 15.0;

  void validate() const;
};

/// Piecewise speed shaping: v/v_min below the desired range, 1 inside
/// [v_min, v_target], linear decay toward v_max above it. The formula is
/// applied literally; v outside [0, v_max] is rejected.
double speed_reward(double v, const RewardConfig& cfg);

/// clip(1 - d / d_max, 0, 1)
double center_reward(double d, const RewardConfig& cfg);

/// clip(1 - alpha / alpha_max, 0, 1)
double heading_reward(double alpha, const RewardConfig& cfg);

/// w_collision * I(collision) + w_solid * I(solid) + w_double * I(double)
double penalty(const sim::StepEvents& events, const RewardConfig& cfg);

/// speed * center * heading - penalty (the multiplicative soft AND).
double total_reward(double v, double d, double alpha, const sim::StepEvents& events,
                    const RewardConfig& cfg);

}  // namespace lanerl::reward
