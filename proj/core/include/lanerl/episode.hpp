#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lanerl::bench {

struct StepRecord {
  double t = 0.0;  // s, strictly increasing
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double v = 0.0;
  double steer_cmd = 0.0;      // planner output
  double throttle_cmd = 0.0;
  double steer_applied = 0.0;  // after the control chain
  double throttle_applied = 0.0;
  double reward = 0.0;
  bool collision = false;
  bool crossed_solid = false;
  bool crossed_double = false;
};

struct InterventionRecord {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double odometer = 0.0;  // driven distance when the takeover fired
  std::string kind;       // collision | stationary | nonfinite-action
};

/// Closed-loop episode trace: the single input to every metric.
struct EpisodeLog {
  std::string map_name;
  std::uint64_t seed = 0;
  std::uint64_t config_digest = 0;
  double route_length = 0.0;
  double max_servo_deg = 0.0;  // steering unit conversion for Std[theta]
  std::vector<StepRecord> steps;
  std::vector<InterventionRecord> interventions;
  double odometer = 0.0;  // teleport resets excluded
  bool route_completed = false;
};

/// Line-delimited records: one JSON object per line, kinds header / step /
/// intervention / end (field order documented in the README).
void save_episode_log(const EpisodeLog& log, const std::filesystem::path& file);
/// Throws std::runtime_error naming the offending line on malformed input.
EpisodeLog load_episode_log(const std::filesystem::path& file);

}  // namespace lanerl::bench
