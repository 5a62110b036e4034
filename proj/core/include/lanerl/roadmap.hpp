#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lanerl/geometry.hpp"

namespace lanerl::sim {

enum class MarkingKind { kDashed, kSolid, kDoubleSolid };
enum class Drivability { kEgo, kAlternative };
enum class Topology { kStraight, kTurn, kComposite };

struct ObstacleSpec {
  geom::Vec2 position;
  double heading = 0.0;
  double length = 0.0;
  double width = 0.0;
  // Scripted motion: empty waypoints = static obstacle.
  std::vector<geom::Vec2> waypoints;
  double speed = 0.0;  // m/s along the waypoint path
};

struct Lane {
  int id = 0;
  geom::Polyline centerline;
  double width = 0.0;
  MarkingKind left_marking = MarkingKind::kDashed;
  MarkingKind right_marking = MarkingKind::kDashed;
  Drivability drivability = Drivability::kEgo;

  // Derived offset curves, built on load.
  geom::Polyline left_boundary;
  geom::Polyline right_boundary;
};

/// Ground-truth lane-world map: the source from which semantic labels,
/// lane measurements, and crossing events are produced.
struct RoadMap {
  std::string name;
  Topology topology = Topology::kStraight;
  std::vector<Lane> lanes;
  std::vector<ObstacleSpec> obstacles;
  int route_lane = 0;  // lane id whose centerline defines the evaluation route

  const Lane* lane_by_id(int id) const;
  const Lane& route() const;
  double route_length() const { return route().centerline.length(); }

  /// Checks the documented invariants; throws std::runtime_error naming the
  /// first violated one.
  void validate() const;
};

/// Plain-text map format (see README for the schema). Throws
/// std::runtime_error with file and line context on malformed input.
RoadMap load_map(const std::filesystem::path& file);
void save_map(const RoadMap& map, const std::filesystem::path& file);

/// Builds boundary polylines from centerline and width. Called by load_map;
/// exposed for programmatically built maps.
void build_boundaries(RoadMap& map);

}  // namespace lanerl::sim
