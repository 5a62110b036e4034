#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "lanerl/reward.hpp"
#include "lanerl/rng.hpp"

using namespace lanerl;
using namespace lanerl::reward;
using lanerl::sim::StepEvents;

namespace {
RewardConfig default_cfg() {
  RewardConfig cfg;  // v_min 1, v_target 5, v_max 10, d_max 1.75, alpha_max pi/2
  cfg.validate();
  return cfg;
}
}  // namespace

TEST_CASE("speed_reward boundary values") {
  RewardConfig cfg = default_cfg();
  CHECK(speed_reward(cfg.v_min, cfg) == 1.0);
  CHECK(speed_reward(0.0, cfg) == 0.0);
  CHECK(speed_reward(cfg.v_max, cfg) == 0.0);
  CHECK(speed_reward(0.5, cfg) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(speed_reward(7.5, cfg) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(speed_reward(-0.1, cfg), std::invalid_argument);
  CHECK_THROWS_AS(speed_reward(10.5, cfg), std::invalid_argument);
}

TEST_CASE("center_reward follows the clipped linear form") {
  RewardConfig cfg = default_cfg();
  CHECK(center_reward(0.0, cfg) == 1.0);
  CHECK(center_reward(cfg.d_max, cfg) == 0.0);
  CHECK(center_reward(2.0 * cfg.d_max, cfg) == 0.0);  // clip active
  CHECK(center_reward(0.875, cfg) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("heading_reward follows the clipped linear form") {
  RewardConfig cfg = default_cfg();
  CHECK(heading_reward(0.0, cfg) == 1.0);
  CHECK(heading_reward(cfg.alpha_max / 2.0, cfg) == doctest::Approx(0.5).epsilon(1e-15));
  RewardConfig tight = cfg;
  tight.alpha_max = geom::kPi / 4.0;
  CHECK(heading_reward(geom::kPi, tight) == 0.0);  // clip active
}

TEST_CASE("penalty is the weighted indicator sum") {
  RewardConfig cfg = default_cfg();
  StepEvents none;
  CHECK(penalty(none, cfg) == 0.0);
  StepEvents crash;
  crash.collision = true;
  CHECK(penalty(crash, cfg) == 25.0);
  StepEvents crash_double = crash;
  crash_double.crossed_double_solid = true;
  CHECK(penalty(crash_double, cfg) == 40.0);
  StepEvents all = crash_double;
  all.crossed_solid = true;
  CHECK(penalty(all, cfg) == 52.0);
}

TEST_CASE("total_reward combines factors multiplicatively") {
  RewardConfig cfg = default_cfg();
  StepEvents none;
  CHECK(total_reward(3.0, 0.0, 0.0, none, cfg) == 1.0);
  // Soft-AND annihilation: one zero factor kills the whole product.
  CHECK(total_reward(0.0, 0.0, 0.0, none, cfg) == 0.0);
  CHECK(total_reward(3.0, cfg.d_max, 0.0, none, cfg) == 0.0);
  // Hand evaluation: 1 * 0.5 * 0.5 - 25.
  StepEvents crash;
  crash.collision = true;
  CHECK(total_reward(cfg.v_min, cfg.d_max / 2.0, cfg.alpha_max / 2.0, crash, cfg) ==
        doctest::Approx(-24.75).epsilon(1e-15));
}

TEST_CASE("reward range and monotonicity properties") {
  RewardConfig cfg = default_cfg();
  Rng rng(21);
  StepEvents none;
  for (int i = 0; i < 3000; ++i) {
    double v = rng.uniform(0.0, cfg.v_max);
    double d = rng.uniform(0.0, 3.0);
    double a = rng.uniform(0.0, geom::kPi);
    double r = total_reward(v, d, a, none, cfg);
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);

    // Non-increasing in d and alpha.
    CHECK(total_reward(v, d + 0.1, a, none, cfg) <= r + 1e-12);
    if (a + 0.1 <= geom::kPi) CHECK(total_reward(v, d, a + 0.1, none, cfg) <= r + 1e-12);
    // Non-decreasing in v below v_min, non-increasing above v_target.
    if (v + 0.1 <= cfg.v_min) CHECK(total_reward(v + 0.1, d, a, none, cfg) >= r - 1e-12);
    if (v >= cfg.v_target && v + 0.1 <= cfg.v_max) {
      CHECK(total_reward(v + 0.1, d, a, none, cfg) <= r + 1e-12);
    }
  }
}

TEST_CASE("penalty is additive over disjoint event sets") {
  RewardConfig cfg = default_cfg();
  StepEvents a;
  a.collision = true;
  StepEvents b;
  b.crossed_solid = true;
  StepEvents c;
  c.crossed_double_solid = true;
  StepEvents ab = a;
  ab.crossed_solid = true;
  StepEvents abc = ab;
  abc.crossed_double_solid = true;
  CHECK(penalty(ab, cfg) == penalty(a, cfg) + penalty(b, cfg));
  CHECK(penalty(abc, cfg) == penalty(a, cfg) + penalty(b, cfg) + penalty(c, cfg));
}

TEST_CASE("RewardConfig validation") {
  RewardConfig bad = default_cfg();
  bad.v_min = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = default_cfg();
  bad.v_target = bad.v_max;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = default_cfg();
  bad.alpha_max = 4.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
