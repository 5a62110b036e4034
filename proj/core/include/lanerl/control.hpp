#pragma once

#include <utility>
#include <vector>

#include "lanerl/observation.hpp"

namespace lanerl::ctrl {

/// First-order exponential smoother on the two action channels:
/// y <- (1 - beta) * y_prev + beta * x.
struct FilterState {
  double beta = 0.5;
  double steering = 0.0;
  double throttle = 0.0;
  bool primed = false;  // first sample passes through unfiltered
};

Action low_pass(const Action& raw, FilterState& filt);

/// Monotone piecewise-linear mapping from the smoothed high-level action to
/// low-level targets: wheel speed (rad/s) and steering servo angle (rad).
struct PhysicalMap {
  double max_wheel_speed = 50.0;  // rad/s
  double max_servo_angle = 0.45;  // rad
  double wheel_radius = 0.2;      // m; converts wheel speed to ground speed
  // Knots over throttle in [-1, 1] -> wheel speed fraction in [-1, 1] and
  // steering in [-1, 1] -> servo fraction. Odd-symmetric steering curve.
  std::vector<std::pair<double, double>> throttle_curve = {{-1, -1}, {0, 0}, {1, 1}};
  std::vector<std::pair<double, double>> steering_curve = {{-1, -1}, {0, 0}, {1, 1}};

  void validate() const;  // monotone knots; steering passes through 0
};

struct LowLevelTargets {
  double wheel_speed = 0.0;  // rad/s
  double servo_angle = 0.0;  // rad
};
LowLevelTargets map_targets(const Action& smoothed, const PhysicalMap& map);

/// PID with output limiting and integral anti-windup clamping.
struct PIDState {
  double kp = 1.0;
  double ki = 0.0;
  double kd = 0.0;
  double integral = 0.0;
  double prev_error = 0.0;
  bool has_prev = false;
  double out_lo = -1.0;
  double out_hi = 1.0;
  double integral_clamp = 1.0;
};

double pid_step(double target, double measurement, double dt, PIDState& state);

/// The deployed chain: smooth the planner action, map it to targets, track
/// each target with its own PID, emit the actuation consumed by the plant.
struct ControlChainConfig {
  double filter_beta = 0.5;
  PhysicalMap physical;
  PIDState wheel_pid{2.5, 1.8, 0.0, 0, 0, false, -1, 1, 0.6};
  PIDState servo_pid{4.0, 2.5, 0.0, 0, 0, false, -1, 1, 0.8};
};

class ControlChain {
 public:
  explicit ControlChain(const ControlChainConfig& cfg);

  /// One 100 ms tick: planner action in, low-level actuation out.
  /// `measured_speed` is the vehicle speed (m/s) mapped onto the wheel;
  /// `speed_per_wheel_rad` converts wheel speed to m/s for that mapping.
  Action actuate(const Action& planned, double measured_speed, double dt);

  void reset();
  const LowLevelTargets& last_targets() const { return targets_; }

 private:
  ControlChainConfig cfg_;
  FilterState filter_;
  PIDState wheel_pid_;
  PIDState servo_pid_;
  LowLevelTargets targets_;
  double servo_estimate_ = 0.0;  // rad; the servo tracks commands within a tick
};

}  // namespace lanerl::ctrl
