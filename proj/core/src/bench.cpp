#include "lanerl/bench.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "lanerl/rng.hpp"
#include "lanerl/vehicle.hpp"

namespace lanerl::bench {

namespace {

constexpr double kRadToDeg = 180.0 / geom::kPi;

struct EpisodeRunner {
  const Policy& policy;
  const sim::RoadMap& map;
  const GapConfig& gap;
  const BenchConfig& cfg;
  std::uint64_t seed;

  EpisodeLog run() {
    Rng vehicle_rng(derive_seed(seed, "vehicle"));
    Rng jitter_rng(derive_seed(seed, "camera"));
    Rng noise_rng(derive_seed(seed, "render-noise"));

    const std::vector<sim::VehicleParams>& pool =
        gap.dynamics ? cfg.test_vehicles : cfg.train_vehicles;
    sim::VehicleParams vehicle = pool[vehicle_rng.index(pool.size())];

    sim::CameraJitter jitter;
    if (gap.visual) {
      jitter.dx = jitter_rng.uniform(-cfg.test_camera_jitter_xy, cfg.test_camera_jitter_xy);
      jitter.dy = jitter_rng.uniform(-cfg.test_camera_jitter_xy, cfg.test_camera_jitter_xy);
      jitter.dtheta =
          jitter_rng.uniform(-cfg.test_camera_jitter_theta, cfg.test_camera_jitter_theta);
    }

    const geom::Polyline& route = map.route().centerline;
    double route_half_width = 0.5 * map.route().width;
    std::vector<sim::Obstacle> obstacles = sim::Obstacle::from_specs(map.obstacles);

    EpisodeLog log;
    log.map_name = map.name;
    log.seed = seed;
    log.config_digest = cfg.config_digest;
    log.route_length = route.length();
    log.max_servo_deg = cfg.control.physical.max_servo_angle * kRadToDeg;

    sim::VehicleState state{route.at(1.0).x, route.at(1.0).y, route.heading_at(1.0), 0.0};
    ctrl::ControlChain chain(cfg.control);
    int stationary = 0;
    double t = 0.0;

    auto observe = [&]() -> Observation {
      if (cfg.obs_source == ObsSource::kSemantic || !gap.visual) {
        // Ideal perception: clean ground-truth semantics, nominal camera.
        return sim::render_semantic(map, state, vehicle, obstacles, {}, cfg.train_render);
      }
      return sim::render_semantic(map, state, vehicle, obstacles, jitter, cfg.test_render,
                                  &noise_rng);
    };

    auto intervene = [&](const char* kind) -> bool {
      log.interventions.push_back(InterventionRecord{t, state.x, state.y, log.odometer, kind});
      // Teleport to the nearest safe in-lane pose ahead, heading aligned.
      double s = route.project(state.position()).s + cfg.safe_reset_ahead;
      while (s < route.length()) {
        sim::VehicleState candidate{route.at(s).x, route.at(s).y, route.heading_at(s), 0.0};
        bool blocked = false;
        for (const sim::Obstacle& ob : obstacles) {
          if (geom::obb_overlap(candidate.footprint(vehicle), ob.footprint())) {
            blocked = true;
            break;
          }
        }
        if (!blocked) {
          state = candidate;
          stationary = 0;
          chain.reset();
          return true;
        }
        s += 1.0;
      }
      return false;  // no safe pose left before the route end
    };

    for (int step_i = 0; step_i < cfg.step_budget; ++step_i) {
      Observation obs = observe();
      PolicyContext ctx{obs, state, map, obstacles, vehicle};
      Action planned = policy(ctx);
      if (!planned.finite()) {
        if (!intervene("nonfinite-action")) break;
        t += cfg.dt;
        continue;
      }
      Action actuation = chain.actuate(planned.clamped(), state.speed, cfg.dt);

      sim::VehicleState prev = state;
      state = sim::step(prev, actuation, vehicle, cfg.dt);
      for (sim::Obstacle& ob : obstacles) ob.advance(cfg.dt);
      t += cfg.dt;

      sim::StepEvents events =
          sim::detect_events(prev, state, vehicle, map, obstacles, stationary);
      stationary = events.stationary_steps;
      sim::LaneMeasurement lane = sim::measure_lane(state, map, cfg.reward.d_max);
      double r = reward::total_reward(std::min(state.speed, cfg.reward.v_max),
                                      std::min(lane.distance, cfg.reward.d_max),
                                      lane.heading_error, events, cfg.reward);
      log.odometer += (state.position() - prev.position()).norm();
      log.steps.push_back(StepRecord{t, state.x, state.y, state.heading, state.speed,
                                     planned.steering, planned.throttle, actuation.steering,
                                     actuation.throttle, r, events.collision,
                                     events.crossed_solid, events.crossed_double_solid});

      geom::Polyline::Projection on_route = route.project(state.position());
      if (on_route.dist <= route_half_width &&
          on_route.s >= route.length() - route_half_width) {
        log.route_completed = true;
        break;
      }
      if (events.collision) {
        if (!intervene("collision")) break;
        continue;
      }
      if (stationary >= cfg.stationary_limit) {
        if (!intervene("stationary")) break;
        continue;
      }
    }
    return log;
  }
};

}  // namespace

EpisodeLog run_episode(const Policy& policy, const sim::RoadMap& map, const GapConfig& gap,
                       const BenchConfig& cfg, std::uint64_t seed) {
  EpisodeRunner runner{policy, map, gap, cfg, seed};
  return runner.run();
}

std::string MpiResult::display() const {
  std::ostringstream os;
  os.precision(1);
  os << std::fixed;
  if (unbounded) {
    os << "> " << total_distance;
  } else {
    os << meters_per_intervention;
  }
  return os.str();
}

MpiResult compute_mpi(const std::vector<EpisodeLog>& logs) {
  if (logs.empty()) throw std::invalid_argument("compute_mpi: no logs");
  MpiResult out;
  for (const EpisodeLog& log : logs) {
    out.total_distance += log.odometer;
    out.total_interventions += static_cast<int>(log.interventions.size());
  }
  if (out.total_interventions == 0) {
    out.unbounded = true;
    out.meters_per_intervention = out.total_distance;
  } else {
    out.meters_per_intervention = out.total_distance / out.total_interventions;
  }
  return out;
}

double compute_sr(const EpisodeLog& log) {
  if (log.route_length <= 0.0) throw std::invalid_argument("compute_sr: route length unknown");
  if (log.interventions.empty()) return 100.0;
  double first = log.interventions.front().odometer;
  return std::clamp(first / log.route_length * 100.0, 0.0, 100.0);
}

Smoothness compute_smoothness(const EpisodeLog& log) {
  if (log.steps.size() < 2) throw std::invalid_argument("compute_smoothness: needs >= 2 steps");
  double sum_s = 0.0, sum_v = 0.0;
  for (const StepRecord& s : log.steps) {
    sum_s += s.steer_applied;
    sum_v += s.v;
  }
  double n = static_cast<double>(log.steps.size());
  double mean_s = sum_s / n, mean_v = sum_v / n;
  double var_s = 0.0, var_v = 0.0;
  for (const StepRecord& s : log.steps) {
    var_s += (s.steer_applied - mean_s) * (s.steer_applied - mean_s);
    var_v += (s.v - mean_v) * (s.v - mean_v);
  }
  Smoothness out;
  out.std_steer_deg = std::sqrt(var_s / n) * log.max_servo_deg;
  out.std_speed = std::sqrt(var_v / n);
  return out;
}

MetricsReport summarize(const std::vector<EpisodeLog>& logs) {
  MetricsReport report;
  report.mpi = compute_mpi(logs);
  report.episode_count = static_cast<int>(logs.size());
  for (const EpisodeLog& log : logs) {
    EpisodeRow row;
    row.map_name = log.map_name;
    row.seed = log.seed;
    row.distance = log.odometer;
    row.interventions = static_cast<int>(log.interventions.size());
    row.sr = compute_sr(log);
    Smoothness sm = compute_smoothness(log);
    row.std_steer_deg = sm.std_steer_deg;
    row.std_speed = sm.std_speed;
    report.rows.push_back(std::move(row));
    report.sr_mean += row.sr;
    report.std_steer_deg += row.std_steer_deg;
    report.std_speed += row.std_speed;
  }
  double n = static_cast<double>(report.rows.size());
  report.sr_mean /= n;
  report.std_steer_deg /= n;
  report.std_speed /= n;
  return report;
}

std::string MetricsReport::table() const {
  std::ostringstream os;
  os << "map                    seed        dist(m)  interv  SR(%)   Std[theta](deg)  Std[v](m/s)\n";
  char line[160];
  for (const EpisodeRow& r : rows) {
    std::snprintf(line, sizeof(line), "%-22s %-11llu %8.1f %7d %6.1f %16.2f %12.3f\n",
                  r.map_name.c_str(), static_cast<unsigned long long>(r.seed), r.distance,
                  r.interventions, r.sr, r.std_steer_deg, r.std_speed);
    os << line;
  }
  std::snprintf(line, sizeof(line),
                "episodes %d | MPI %s | SR %.1f%% | Std[theta] %.2f deg | Std[v] %.3f m/s\n",
                episode_count, mpi.display().c_str(), sr_mean, std_steer_deg, std_speed);
  os << line;
  return os.str();
}

Policy scripted_expert(const ExpertConfig& cfg, const reward::RewardConfig& reward_cfg) {
  return [cfg, reward_cfg](const PolicyContext& ctx) -> Action {
    const geom::Polyline& route = ctx.map.route().centerline;
    double half_width = 0.5 * ctx.map.route().width;
    geom::Polyline::Projection proj = route.project(ctx.state.position());

    double lookahead = std::clamp(cfg.lookahead_base + cfg.lookahead_gain * ctx.state.speed,
                                  cfg.lookahead_base, cfg.lookahead_max);
    geom::Vec2 target = route.at(std::min(proj.s + lookahead, route.length()));
    geom::Vec2 rel = target - ctx.state.position();
    double heading_to_target = std::atan2(rel.y, rel.x);
    double eta = geom::wrap_angle(heading_to_target - ctx.state.heading);
    double chord = std::max(rel.norm(), 1e-6);
    double steer_angle = std::atan2(2.0 * ctx.vehicle.wheelbase * std::sin(eta), chord);
    double steering = std::clamp(steer_angle / ctx.vehicle.max_steer, -1.0, 1.0);

    // Slow down in tight geometry; stop for obstacles on the route ahead.
    double v_des = cfg.cruise_fraction * reward_cfg.v_target *
                   std::max(0.25, 1.0 - 0.75 * std::fabs(steering));
    bool blocked = false;
    for (const sim::Obstacle& ob : ctx.obstacles) {
      geom::Obb box = ob.footprint();
      geom::Polyline::Projection ob_proj = route.project(box.center);
      double along = ob_proj.s - proj.s;
      if (along > 0.0 && along < cfg.obstacle_stop_range &&
          ob_proj.dist < half_width + 0.5 * box.width) {
        blocked = true;
        break;
      }
    }
    double throttle;
    if (blocked) {
      throttle = -1.0;
    } else {
      throttle = std::clamp(v_des / reward_cfg.v_max +
                                cfg.speed_kp * (v_des - ctx.state.speed) / reward_cfg.v_max,
                            -1.0, 1.0);
    }
    return Action{steering, throttle};
  };
}

double NoGapResult::mpi_ratio() const {
  double train = train_condition.mpi.unbounded ? train_condition.mpi.total_distance
                                               : train_condition.mpi.meters_per_intervention;
  double test = test_condition.mpi.unbounded ? test_condition.mpi.total_distance
                                             : test_condition.mpi.meters_per_intervention;
  return train > 0.0 ? test / train : 0.0;
}

NoGapResult nogap_eval(const Policy& policy, const EvalSuite& suite) {
  if (suite.train_maps.empty() || !suite.test_map) {
    throw std::invalid_argument("nogap_eval: needs training maps and a test map");
  }
  struct Task {
    const sim::RoadMap* map;
    GapConfig gap;
    std::uint64_t seed;
    bool test_condition;
  };
  std::vector<Task> tasks;
  std::uint64_t idx = 0;
  for (const sim::RoadMap* map : suite.train_maps) {
    for (int e = 0; e < suite.episodes_per_map; ++e) {
      tasks.push_back(Task{map, GapConfig{}, derive_seed(suite.seed, "train-ep", idx++), false});
    }
  }
  std::uint64_t test_count = suite.train_maps.size() * suite.episodes_per_map;
  for (std::uint64_t e = 0; e < test_count; ++e) {
    tasks.push_back(
        Task{suite.test_map, suite.test_gaps, derive_seed(suite.seed, "test-ep", e), true});
  }

  std::vector<EpisodeLog> logs(tasks.size());
  std::atomic<std::size_t> next{0};
  int workers = std::max(1, suite.threads);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) break;
        logs[i] = run_episode(policy, *tasks[i].map, tasks[i].gap, suite.bench, tasks[i].seed);
      }
    });
  }
  for (std::thread& t : pool) t.join();

  NoGapResult result;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (tasks[i].test_condition) {
      result.test_logs.push_back(std::move(logs[i]));
    } else {
      result.train_logs.push_back(std::move(logs[i]));
    }
  }
  result.train_condition = summarize(result.train_logs);
  result.test_condition = summarize(result.test_logs);
  return result;
}

}  // namespace lanerl::bench
