#pragma once

#include <cmath>
#include <vector>

#include "lanerl/roadmap.hpp"

// Programmatic maps shared by the simulator and benchmark tests.
namespace testmaps {

/// Straight two-lane road along +x: route lane 0 at y = 0, lane 1 at y = width.
inline lanerl::sim::RoadMap straight_two_lane(double length = 100.0, double width = 3.0) {
  using namespace lanerl;
  sim::RoadMap map;
  map.name = "test-straight";
  sim::Lane l0;
  l0.id = 0;
  l0.width = width;
  l0.centerline = geom::Polyline({{0, 0}, {length, 0}});
  l0.left_marking = sim::MarkingKind::kDashed;
  l0.right_marking = sim::MarkingKind::kSolid;
  sim::Lane l1 = l0;
  l1.id = 1;
  l1.centerline = geom::Polyline({{0, width}, {length, width}});
  l1.left_marking = sim::MarkingKind::kSolid;
  l1.right_marking = sim::MarkingKind::kDashed;
  map.lanes = {l0, l1};
  map.route_lane = 0;
  sim::build_boundaries(map);
  map.validate();
  return map;
}

/// Single-lane left-turning arc of the given radius, starting at the origin
/// heading +x.
inline lanerl::sim::RoadMap arc_lane(double radius, double sweep, double step = 0.5,
                                     double width = 3.0) {
  using namespace lanerl;
  std::vector<geom::Vec2> pts;
  int n = std::max(3, static_cast<int>(sweep * radius / step));
  for (int i = 0; i <= n; ++i) {
    double a = sweep * i / n;
    pts.push_back({radius * std::sin(a), radius * (1.0 - std::cos(a))});
  }
  sim::RoadMap map;
  map.name = "test-arc";
  sim::Lane l;
  l.id = 0;
  l.width = width;
  l.centerline = geom::Polyline(std::move(pts));
  map.lanes = {l};
  map.route_lane = 0;
  sim::build_boundaries(map);
  return map;
}

}  // namespace testmaps
