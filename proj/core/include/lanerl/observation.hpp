#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace lanerl {

/// Three-class drivability labels. The values index one-hot channels.
enum SemClass : std::uint8_t {
  kDrivable = 0,       // lane currently occupied by the ego vehicle
  kAltDrivable = 1,    // reachable with a lane change
  kNonDrivable = 2,    // blocked or off-road
};

/// Row-major grid of SemClass labels (one label per cell, one-hot by
/// construction).
struct SemGrid {
  int h = 0;
  int w = 0;
  std::vector<std::uint8_t> cells;

  static SemGrid filled(int h, int w, SemClass c) {
    return SemGrid{h, w, std::vector<std::uint8_t>(static_cast<std::size_t>(h) * w, c)};
  }
  std::uint8_t& at(int r, int c) { return cells[static_cast<std::size_t>(r) * w + c]; }
  std::uint8_t at(int r, int c) const { return cells[static_cast<std::size_t>(r) * w + c]; }
  bool empty() const { return cells.empty(); }
  bool operator==(const SemGrid&) const = default;
};

/// MDP state: semantic grid plus speed scalar (normalized by the vehicle's
/// maximum speed). Vector-valued tasks used for diagnostics carry their state
/// in `vec` and leave the grid empty.
struct Observation {
  SemGrid grid;
  double speed = 0.0;
  std::vector<double> vec;

  bool is_vector() const { return grid.empty(); }
  bool operator==(const Observation&) const = default;
};

/// High-level planning command. Both components live in [-1, 1].
struct Action {
  double steering = 0.0;
  double throttle = 0.0;

  bool finite() const { return std::isfinite(steering) && std::isfinite(throttle); }
  Action clamped() const {
    auto clip = [](double v) { return v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v); };
    return {clip(steering), clip(throttle)};
  }
};

}  // namespace lanerl
