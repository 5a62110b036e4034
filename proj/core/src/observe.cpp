#include "lanerl/observe.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lanerl::sim {

namespace {

/// Cheap per-render view of the lanes with window prefiltering left to the
/// projection (maps are small; project() already skips by segment bounds).
int classify_cell(geom::Vec2 p, const RoadMap& map, const std::vector<geom::Obb>& obstacle_boxes,
                  int ego_lane_id) {
  for (const geom::Obb& box : obstacle_boxes) {
    if (geom::obb_distance(box, p) == 0.0) return kNonDrivable;
  }
  int best_lane = -1;
  double best = std::numeric_limits<double>::infinity();
  for (const Lane& lane : map.lanes) {
    const auto& bb = lane.centerline.bounds();
    double margin = 0.5 * lane.width + 1e-9;
    if (p.x < bb.lo.x - margin || p.x > bb.hi.x + margin || p.y < bb.lo.y - margin ||
        p.y > bb.hi.y + margin) {
      continue;
    }
    geom::Polyline::Projection proj = lane.centerline.project(p);
    if (proj.dist <= margin && proj.dist < best) {
      best = proj.dist;
      best_lane = lane.id;
    }
  }
  if (best_lane < 0) return kNonDrivable;
  return best_lane == ego_lane_id ? kDrivable : kAltDrivable;
}

void dilate(SemGrid& g, int passes) {
  for (int pass = 0; pass < passes; ++pass) {
    SemGrid src = g;
    for (int r = 0; r < g.h; ++r) {
      for (int c = 0; c < g.w; ++c) {
        std::uint8_t m = src.at(r, c);
        if (r > 0) m = std::max(m, src.at(r - 1, c));
        if (r + 1 < g.h) m = std::max(m, src.at(r + 1, c));
        if (c > 0) m = std::max(m, src.at(r, c - 1));
        if (c + 1 < g.w) m = std::max(m, src.at(r, c + 1));
        g.at(r, c) = m;  // class values are ordered by "badness"
      }
    }
  }
}

void label_noise(SemGrid& g, double p, Rng& rng) {
  for (std::uint8_t& cell : g.cells) {
    if (rng.bernoulli(p)) {
      // Uniform over the two other classes: a flip always changes the label.
      std::uint8_t shift = rng.bernoulli(0.5) ? 1 : 2;
      cell = static_cast<std::uint8_t>((cell + shift) % 3);
    }
  }
}

}  // namespace

Observation render_semantic(const RoadMap& map, const VehicleState& state,
                            const VehicleParams& params, const std::vector<Obstacle>& obstacles,
                            const CameraJitter& camera, const RenderConfig& cfg,
                            Rng* noise_rng) {
  Observation obs;
  obs.grid = SemGrid::filled(cfg.grid_h, cfg.grid_w, kNonDrivable);
  obs.speed = std::clamp(state.speed / params.max_speed, 0.0, 1.0);

  double ch = state.heading + camera.dtheta;
  geom::Vec2 fwd{std::cos(state.heading), std::sin(state.heading)};
  geom::Vec2 left{-fwd.y, fwd.x};
  geom::Vec2 cam_pos = state.position() + fwd * camera.dx + left * camera.dy;
  geom::Vec2 cfwd{std::cos(ch), std::sin(ch)};
  geom::Vec2 cleft{-cfwd.y, cfwd.x};

  LaneMeasurement lm = measure_lane(state, map, /*d_max_sentinel=*/1e9);
  int ego_lane = lm.lane_id;

  std::vector<geom::Obb> boxes;
  boxes.reserve(obstacles.size());
  for (const Obstacle& ob : obstacles) boxes.push_back(ob.footprint());

  double cell = cfg.window_m / cfg.grid_h;
  double cell_w = cfg.window_m / cfg.grid_w;
  for (int r = 0; r < cfg.grid_h; ++r) {
    double fx = (cfg.window_m - cfg.forward_offset_m) - (r + 0.5) * cell;
    for (int c = 0; c < cfg.grid_w; ++c) {
      double fy = 0.5 * cfg.window_m - (c + 0.5) * cell_w;
      geom::Vec2 p = cam_pos + cfwd * fx + cleft * fy;
      obs.grid.at(r, c) = static_cast<std::uint8_t>(classify_cell(p, map, boxes, ego_lane));
    }
  }

  if (cfg.degrade) {
    if (cfg.dilate_cells > 0) dilate(obs.grid, cfg.dilate_cells);
    if (cfg.label_noise_p > 0.0) {
      if (!noise_rng) throw std::invalid_argument("render_semantic: degraded mode needs an rng");
      label_noise(obs.grid, cfg.label_noise_p, *noise_rng);
    }
  }
  return obs;
}

SemGrid rotate_grid(const SemGrid& grid, double angle) {
  SemGrid out = SemGrid::filled(grid.h, grid.w, kNonDrivable);
  double cr = (grid.h - 1) * 0.5, cc = (grid.w - 1) * 0.5;
  double cs = std::cos(angle), sn = std::sin(angle);
  for (int r = 0; r < grid.h; ++r) {
    for (int c = 0; c < grid.w; ++c) {
      // Inverse mapping: destination cell samples the source grid.
      double dr = r - cr, dc = c - cc;
      double sr = cs * dr - sn * dc + cr;
      double sc = sn * dr + cs * dc + cc;
      long ir = std::lround(sr), ic = std::lround(sc);
      if (ir >= 0 && ir < grid.h && ic >= 0 && ic < grid.w) {
        out.at(r, c) = grid.at(static_cast<int>(ir), static_cast<int>(ic));
      }
    }
  }
  return out;
}

Observation augment(const Observation& obs, const AugmentConfig& cfg, Rng& rng) {
  Observation out = obs;
  if (cfg.rotation_range != 0.0) {
    double angle = rng.uniform(-cfg.rotation_range, cfg.rotation_range);
    out.grid = rotate_grid(obs.grid, angle);
  }
  if (cfg.label_noise_p > 0.0) label_noise(out.grid, cfg.label_noise_p, rng);
  return out;
}

void RandomizationConfig::validate() const {
  if (vehicle_set.empty()) {
    throw std::invalid_argument("RandomizationConfig: vehicle parameter set is empty");
  }
  for (const VehicleParams& p : vehicle_set) p.validate();
  if (camera_jitter_xy < 0.0 || camera_jitter_theta < 0.0) {
    throw std::invalid_argument("RandomizationConfig: jitter ranges must be non-negative");
  }
  if (augment.label_noise_p < 0.0 || augment.label_noise_p > 0.2) {
    throw std::invalid_argument("RandomizationConfig: label noise probability outside [0, 0.2]");
  }
  if (map_count < 1) throw std::invalid_argument("RandomizationConfig: no maps");
}

EpisodeDraw randomize_episode(const RandomizationConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(mix64(seed));
  EpisodeDraw draw;
  draw.map_index = static_cast<int>(rng.index(cfg.map_count));
  draw.vehicle = cfg.vehicle_set[rng.index(cfg.vehicle_set.size())];
  if (cfg.camera_jitter_xy > 0.0) {
    draw.camera.dx = rng.uniform(-cfg.camera_jitter_xy, cfg.camera_jitter_xy);
    draw.camera.dy = rng.uniform(-cfg.camera_jitter_xy, cfg.camera_jitter_xy);
  }
  if (cfg.camera_jitter_theta > 0.0) {
    draw.camera.dtheta = rng.uniform(-cfg.camera_jitter_theta, cfg.camera_jitter_theta);
  }
  return draw;
}

}  // namespace lanerl::sim
