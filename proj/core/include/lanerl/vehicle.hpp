#pragma once

#include "lanerl/geometry.hpp"
#include "lanerl/observation.hpp"

namespace lanerl::sim {

/// Physical properties subject to dynamics randomization.
struct VehicleParams {
  double wheelbase = 0.65;       // m
  double width = 0.75;           // m
  double length = 1.0;           // m
  double drag = 0.3;             // 1/s, first-order speed decay
  double max_speed = 10.0;       // m/s
  double max_steer = 0.45;       // rad, front wheel angle at |steering| = 1
  double throttle_gain = 3.0;    // m/s^2 at |throttle| = 1

  void validate() const;  // all strictly positive
};

struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // rad, wrapped to (-pi, pi]
  double speed = 0.0;    // m/s, in [0, max_speed]

  geom::Vec2 position() const { return {x, y}; }
  geom::Obb footprint(const VehicleParams& p) const {
    return geom::Obb{{x, y}, heading, p.length, p.width};
  }
};

/// Kinematic bicycle step with first-order speed integration:
///   heading' = heading + dt * v * tan(steer * max_steer) / wheelbase
///   position advances along the current heading at the current speed
///   v' = clip(v + dt * (throttle_gain * throttle - drag * v), 0, max_speed)
/// Deterministic; throws std::invalid_argument on non-finite state or action
/// or non-positive dt.
VehicleState step(const VehicleState& state, const Action& action, const VehicleParams& params,
                  double dt);

}  // namespace lanerl::sim
