#pragma once

#include <vector>

#include "lanerl/observation.hpp"
#include "lanerl/rng.hpp"
#include "lanerl/simworld.hpp"

namespace lanerl::sim {

/// Bird's-eye rendering window. The camera sits at the vehicle pose (plus
/// jitter); rows sweep from `window_m - forward_offset_m` ahead of the camera
/// down to `-forward_offset_m` behind it, columns sweep left to right.
struct RenderConfig {
  int grid_h = 64;
  int grid_w = 64;
  double window_m = 16.0;
  double forward_offset_m = 2.0;

  // Test-condition degradation (the visual gap): grown class boundaries and
  // per-cell label noise. Train-condition rendering keeps both off.
  bool degrade = false;
  double label_noise_p = 0.05;
  int dilate_cells = 1;
};

struct CameraJitter {
  double dx = 0.0;      // m, vehicle frame (forward)
  double dy = 0.0;      // m, vehicle frame (left)
  double dtheta = 0.0;  // rad
};

/// Rasterizes the three-class ground-truth view. The lane currently assigned
/// to the vehicle renders drivable, every other lane alternatively-drivable,
/// obstacle footprints and off-road cells non-drivable. The speed channel is
/// attached normalized by `params.max_speed`. Deterministic; `noise_rng` is
/// only consumed when cfg.degrade is set.
Observation render_semantic(const RoadMap& map, const VehicleState& state,
                            const VehicleParams& params, const std::vector<Obstacle>& obstacles,
                            const CameraJitter& camera, const RenderConfig& cfg,
                            Rng* noise_rng = nullptr);

/// Observation augmentation: rotation by a uniform angle within
/// `rotation_range` (nearest-neighbour, labels stay one-hot) plus optional
/// label noise. Cells rotated in from outside the grid become non-drivable.
struct AugmentConfig {
  double rotation_range = 0.1;  // rad
  double label_noise_p = 0.0;
};
Observation augment(const Observation& obs, const AugmentConfig& cfg, Rng& rng);

/// Grid rotation by a fixed angle (exposed for the symmetry tests).
SemGrid rotate_grid(const SemGrid& grid, double angle);

/// Domain randomization knobs drawn once per episode.
struct RandomizationConfig {
  double camera_jitter_xy = 0.0;      // m, +/- range per axis
  double camera_jitter_theta = 0.0;   // rad, +/- range
  std::vector<VehicleParams> vehicle_set;
  AugmentConfig augment;
  bool reseed_each_episode = true;
  int map_count = 1;

  void validate() const;
};

struct EpisodeDraw {
  int map_index = 0;
  VehicleParams vehicle;
  CameraJitter camera;
};

/// Deterministic function of the seed: map choice, vehicle parameters from
/// the discrete set, camera pose within the jitter ranges.
EpisodeDraw randomize_episode(const RandomizationConfig& cfg, std::uint64_t seed);

}  // namespace lanerl::sim
