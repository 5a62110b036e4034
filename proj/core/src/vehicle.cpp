#include "lanerl/vehicle.hpp"

#include <cmath>
#include <stdexcept>

namespace lanerl::sim {

void VehicleParams::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string("VehicleParams: ") + what + " must be positive");
    }
  };
  positive(wheelbase, "wheelbase");
  positive(width, "width");
  positive(length, "length");
  positive(max_speed, "max_speed");
  positive(max_steer, "max_steer");
  positive(throttle_gain, "throttle_gain");
  if (drag < 0.0 || !std::isfinite(drag)) {
    throw std::invalid_argument("VehicleParams: drag must be non-negative");
  }
}

VehicleState step(const VehicleState& state, const Action& action, const VehicleParams& params,
                  double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  if (!std::isfinite(state.x) || !std::isfinite(state.y) || !std::isfinite(state.heading) ||
      !std::isfinite(state.speed)) {
    throw std::invalid_argument("step: non-finite vehicle state");
  }
  if (!action.finite()) throw std::invalid_argument("step: non-finite action");

  Action a = action.clamped();
  double steer = a.steering * params.max_steer;

  VehicleState next = state;
  next.x = state.x + dt * state.speed * std::cos(state.heading);
  next.y = state.y + dt * state.speed * std::sin(state.heading);
  next.heading =
      geom::wrap_angle(state.heading + dt * state.speed * std::tan(steer) / params.wheelbase);
  double v = state.speed + dt * (params.throttle_gain * a.throttle - params.drag * state.speed);
  next.speed = std::clamp(v, 0.0, params.max_speed);
  return next;
}

}  // namespace lanerl::sim
