#include "lanerl/control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lanerl::ctrl {

Action low_pass(const Action& raw, FilterState& filt) {
  if (!(filt.beta > 0.0 && filt.beta <= 1.0)) {
    throw std::invalid_argument("low_pass: beta must lie in (0, 1]");
  }
  if (!filt.primed) {
    filt.steering = raw.steering;
    filt.throttle = raw.throttle;
    filt.primed = true;
  } else {
    filt.steering = (1.0 - filt.beta) * filt.steering + filt.beta * raw.steering;
    filt.throttle = (1.0 - filt.beta) * filt.throttle + filt.beta * raw.throttle;
  }
  return Action{filt.steering, filt.throttle};
}

namespace {

double interp(const std::vector<std::pair<double, double>>& knots, double x) {
  if (x <= knots.front().first) return knots.front().second;
  if (x >= knots.back().first) return knots.back().second;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (x <= knots[i].first) {
      double t = (x - knots[i - 1].first) / (knots[i].first - knots[i - 1].first);
      return knots[i - 1].second + t * (knots[i].second - knots[i - 1].second);
    }
  }
  return knots.back().second;
}

void check_monotone(const std::vector<std::pair<double, double>>& knots, const char* what) {
  if (knots.size() < 2) throw std::invalid_argument(std::string(what) + ": needs >= 2 knots");
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i].first > knots[i - 1].first) || knots[i].second < knots[i - 1].second) {
      throw std::invalid_argument(std::string(what) + ": knots must be strictly increasing in x"
                                  " and non-decreasing in y");
    }
  }
}

}  // namespace

void PhysicalMap::validate() const {
  if (max_wheel_speed <= 0.0 || max_servo_angle <= 0.0 || wheel_radius <= 0.0) {
    throw std::invalid_argument("PhysicalMap: limits must be positive");
  }
  check_monotone(throttle_curve, "throttle_curve");
  check_monotone(steering_curve, "steering_curve");
  if (std::fabs(interp(steering_curve, 0.0)) > 1e-12) {
    throw std::invalid_argument("PhysicalMap: steering curve must map 0 to 0");
  }
}

LowLevelTargets map_targets(const Action& smoothed, const PhysicalMap& map) {
  LowLevelTargets t;
  t.wheel_speed = interp(map.throttle_curve, smoothed.throttle) * map.max_wheel_speed;
  t.servo_angle = interp(map.steering_curve, smoothed.steering) * map.max_servo_angle;
  return t;
}

double pid_step(double target, double measurement, double dt, PIDState& state) {
  if (!(dt > 0.0)) throw std::invalid_argument("pid_step: dt must be positive");
  double error = target - measurement;
  state.integral = std::clamp(state.integral + error * dt, -state.integral_clamp,
                              state.integral_clamp);
  double derivative = state.has_prev ? (error - state.prev_error) / dt : 0.0;
  state.prev_error = error;
  state.has_prev = true;
  double out = state.kp * error + state.ki * state.integral + state.kd * derivative;
  return std::clamp(out, state.out_lo, state.out_hi);
}

ControlChain::ControlChain(const ControlChainConfig& cfg)
    : cfg_(cfg), wheel_pid_(cfg.wheel_pid), servo_pid_(cfg.servo_pid) {
  cfg_.physical.validate();
  filter_.beta = cfg.filter_beta;
}

void ControlChain::reset() {
  filter_ = FilterState{};
  filter_.beta = cfg_.filter_beta;
  wheel_pid_ = cfg_.wheel_pid;
  servo_pid_ = cfg_.servo_pid;
  servo_estimate_ = 0.0;
  targets_ = LowLevelTargets{};
}

Action ControlChain::actuate(const Action& planned, double measured_speed, double dt) {
  Action smoothed = low_pass(planned.clamped(), filter_);
  targets_ = map_targets(smoothed, cfg_.physical);

  double wheel_measured = measured_speed / cfg_.physical.wheel_radius;
  double throttle_cmd = pid_step(targets_.wheel_speed, wheel_measured, dt, wheel_pid_);

  double steer_cmd = pid_step(targets_.servo_angle, servo_estimate_, dt, servo_pid_);
  // The servo reaches its commanded angle within one control interval.
  servo_estimate_ = steer_cmd * cfg_.physical.max_servo_angle;

  return Action{steer_cmd, throttle_cmd};
}

}  // namespace lanerl::ctrl
