#pragma once

#include <optional>
#include <vector>

#include "lanerl/geometry.hpp"
#include "lanerl/roadmap.hpp"
#include "lanerl/vehicle.hpp"

namespace lanerl::sim {

/// Obstacle at runtime: footprint pose advanced along its scripted path.
struct Obstacle {
  ObstacleSpec spec;
  double path_s = 0.0;  // arc length along the waypoint polyline

  geom::Obb footprint() const;
  void advance(double dt);

  static std::vector<Obstacle> from_specs(const std::vector<ObstacleSpec>& specs);
};

/// Per-step incident flags feeding the reward penalty and the intervention
/// logic. Crossing a double-solid boundary is not double-counted as a plain
/// solid crossing of the same boundary.
struct StepEvents {
  bool collision = false;
  bool crossed_solid = false;
  bool crossed_double_solid = false;
  int stationary_steps = 0;  // consecutive steps with displacement < 1 cm

  bool any_cross() const { return crossed_solid || crossed_double_solid; }
};

inline constexpr double kStationaryEps = 0.01;  // m per step

struct LaneMeasurement {
  double distance = 0.0;       // m to the nearest ego-drivable centerline
  double heading_error = 0.0;  // rad in [0, pi]
  int lane_id = -1;
  double lane_s = 0.0;         // arc length along that centerline
  bool off_road = false;       // outside every lane corridor
};

/// Distance and heading error against the nearest ego-drivable lane.
/// When the vehicle is outside every lane corridor the measurement carries
/// the off_road flag and `distance` saturates at `d_max_sentinel`.
LaneMeasurement measure_lane(const VehicleState& state, const RoadMap& map,
                             double d_max_sentinel);

/// Incident detection between two consecutive states: obstacle contact or
/// off-road excursion (both reported as collision), marked-boundary
/// crossings along the motion segment, and the stationary counter.
StepEvents detect_events(const VehicleState& prev, const VehicleState& next,
                         const VehicleParams& params, const RoadMap& map,
                         const std::vector<Obstacle>& obstacles, int stationary_so_far);

/// True when the position is inside some lane corridor (any drivability).
bool inside_any_lane(geom::Vec2 p, const RoadMap& map);

}  // namespace lanerl::sim
