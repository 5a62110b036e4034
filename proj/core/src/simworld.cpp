#include "lanerl/simworld.hpp"

#include <cmath>
#include <limits>

namespace lanerl::sim {

geom::Obb Obstacle::footprint() const {
  if (spec.waypoints.size() < 2) {
    return geom::Obb{spec.position, spec.heading, spec.length, spec.width};
  }
  geom::Polyline path(spec.waypoints);
  double s = std::fmod(path_s, path.length());
  return geom::Obb{path.at(s), path.heading_at(s), spec.length, spec.width};
}

void Obstacle::advance(double dt) {
  if (spec.waypoints.size() >= 2) path_s += spec.speed * dt;
}

std::vector<Obstacle> Obstacle::from_specs(const std::vector<ObstacleSpec>& specs) {
  std::vector<Obstacle> out;
  out.reserve(specs.size());
  for (const ObstacleSpec& s : specs) out.push_back(Obstacle{s, 0.0});
  return out;
}

LaneMeasurement measure_lane(const VehicleState& state, const RoadMap& map,
                             double d_max_sentinel) {
  LaneMeasurement best;
  best.distance = std::numeric_limits<double>::infinity();
  geom::Vec2 p = state.position();
  for (const Lane& lane : map.lanes) {
    if (lane.drivability != Drivability::kEgo) continue;
    geom::Polyline::Projection proj = lane.centerline.project(p);
    if (proj.dist < best.distance) {
      best.distance = proj.dist;
      best.heading_error = geom::angle_diff(state.heading, proj.heading);
      best.lane_id = lane.id;
      best.lane_s = proj.s;
    }
  }
  best.off_road = !inside_any_lane(p, map);
  if (best.lane_id < 0) {
    // No ego-drivable lane at all; saturate.
    best.distance = d_max_sentinel;
    best.off_road = true;
    return best;
  }
  if (best.off_road && best.distance > d_max_sentinel) best.distance = d_max_sentinel;
  return best;
}

bool inside_any_lane(geom::Vec2 p, const RoadMap& map) {
  for (const Lane& lane : map.lanes) {
    geom::Polyline::Projection proj = lane.centerline.project(p);
    if (proj.dist <= 0.5 * lane.width) return true;
  }
  return false;
}

StepEvents detect_events(const VehicleState& prev, const VehicleState& next,
                         const VehicleParams& params, const RoadMap& map,
                         const std::vector<Obstacle>& obstacles, int stationary_so_far) {
  StepEvents ev;

  // Swept obstacle contact: sample the motion at <= 2 cm spacing so grazing
  // passes inside the step are not skipped over.
  if (!obstacles.empty()) {
    double displacement = (next.position() - prev.position()).norm();
    int substeps = std::max(1, static_cast<int>(std::ceil(displacement / 0.02)));
    double dh = geom::wrap_angle(next.heading - prev.heading);
    for (int i = 1; i <= substeps && !ev.collision; ++i) {
      double t = static_cast<double>(i) / substeps;
      VehicleState mid;
      mid.x = prev.x + t * (next.x - prev.x);
      mid.y = prev.y + t * (next.y - prev.y);
      mid.heading = geom::wrap_angle(prev.heading + t * dh);
      geom::Obb body = mid.footprint(params);
      for (const Obstacle& ob : obstacles) {
        if (geom::obb_overlap(body, ob.footprint())) {
          ev.collision = true;
          break;
        }
      }
    }
  }
  // Off-road excursion counts as collision for reward and intervention.
  if (!ev.collision && !inside_any_lane(next.position(), map)) ev.collision = true;

  geom::Vec2 a = prev.position();
  geom::Vec2 b = next.position();
  if ((b - a).norm() > 0.0) {
    for (const Lane& lane : map.lanes) {
      // A double-solid crossing of one boundary must not also fire the plain
      // solid flag, so each boundary reports exactly its own kind.
      auto check = [&](const geom::Polyline& boundary, MarkingKind kind) {
        if (kind == MarkingKind::kDashed) return;
        if (!boundary.crossed_by(a, b)) return;
        if (kind == MarkingKind::kSolid) ev.crossed_solid = true;
        if (kind == MarkingKind::kDoubleSolid) ev.crossed_double_solid = true;
      };
      check(lane.left_boundary, lane.left_marking);
      check(lane.right_boundary, lane.right_marking);
    }
  }

  double displacement = (b - a).norm();
  ev.stationary_steps = displacement < kStationaryEps ? stationary_so_far + 1 : 0;
  return ev;
}

}  // namespace lanerl::sim
