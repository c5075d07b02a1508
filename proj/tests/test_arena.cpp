#include "crl/arena.hpp"

#include <doctest.h>

#include <cmath>

using namespace crl;

namespace {

Vec zero_action() { return Vec::Zero(4); }

Vec action(double ax, double ay, double turn, double recharge) {
  Vec a(4);
  a << ax, ay, turn, recharge;
  return a;
}

}  // namespace

TEST_CASE("reset: same seed gives bit-identical observations") {
  MiniArena a(ArenaConfig{}, 42), b(ArenaConfig{}, 42);
  CHECK(a.reset() == b.reset());
  CHECK(a.reset() == b.reset());  // second episode too
}

TEST_CASE("reset: rate observations are zero and time fraction is one") {
  MiniArena env(ArenaConfig{}, 1);
  const Vec obs = env.reset();
  const int dim = env.observation_dim();
  // Field layout: rates are the 4 entries before the final time fraction.
  for (int i = dim - 5; i < dim - 1; ++i) CHECK(obs[i] == 0.0);
  CHECK(obs[dim - 1] == 1.0);
}

TEST_CASE("observation dimension equals the sum of field sizes") {
  MiniArena env(ArenaConfig{}, 1);
  int total = 0;
  for (const auto& f : env.observation_spec()) total += f.size;
  CHECK(env.observation_dim() == total);
  CHECK(env.reset().size() == total);
  CHECK(env.action_dim() == 4);
  CHECK(env.action_spec().size() == 4);
  for (const auto& f : env.action_spec()) {
    CHECK(f.lo == -1.0);
    CHECK(f.hi == 1.0);
  }
}

TEST_CASE("deterministic trajectories for a fixed action sequence") {
  ArenaConfig cfg;
  MiniArena a(cfg, 7), b(cfg, 7);
  a.reset();
  b.reset();
  Rng rng(99);
  for (int t = 0; t < 400; ++t) {
    const Vec act = rng.uniform_vec(4, -1.0, 1.0);
    const StepOutcome oa = a.step(act);
    const StepOutcome ob = b.step(act);
    REQUIRE(oa.next_observation == ob.next_observation);
    REQUIRE(oa.reward == ob.reward);
    REQUIRE(oa.indicators == ob.indicators);
    REQUIRE(oa.done == ob.done);
    if (oa.done) {
      a.reset();
      b.reset();
    }
  }
}

TEST_CASE("agent placed inside a lava rectangle raises the lava indicator") {
  MiniArena env(ArenaConfig{}, 3);
  env.reset();
  ArenaState s = env.state();
  s.x = 0.55;
  s.y = 0.30;  // inside a default lava patch
  s.vx = s.vy = 0.0;
  s.step = 0;
  env.set_state(s);
  const StepOutcome out = env.step(zero_action());
  CHECK(out.indicators[0] == 1.0);
}

TEST_CASE("stationary agent facing the marker is not penalised") {
  MiniArena env(ArenaConfig{}, 3);
  env.reset();
  ArenaState s = env.state();
  s.x = 0.2;
  s.y = 0.2;
  s.vx = s.vy = 0.0;
  s.heading = std::atan2(env.config().marker_y - s.y,
                         env.config().marker_x - s.x);
  s.goal_x = 0.9;
  s.goal_y = 0.9;
  env.set_state(s);
  const StepOutcome out = env.step(zero_action());
  CHECK(out.indicators[1] == 0.0);  // not_looking
  // Turn fully away: the marker leaves the field of view within a few steps.
  for (int i = 0; i < 8; ++i) env.step(action(0, 0, 1.0, -1.0));
  const StepOutcome turned = env.step(action(0, 0, 1.0, -1.0));
  CHECK(turned.indicators[1] == 1.0);
}

TEST_CASE("shaping reward matches an independent distance recomputation") {
  ArenaConfig cfg;
  MiniArena env(cfg, 17);
  env.reset();
  Rng rng(18);
  int checked = 0;
  while (checked < 1000) {
    const ArenaState before = env.state();
    const double d_prev =
        std::hypot(before.goal_x - before.x, before.goal_y - before.y);
    const StepOutcome out = env.step(rng.uniform_vec(4, -1.0, 1.0));
    const ArenaState after = env.state();
    const double d_now =
        std::hypot(after.goal_x - after.x, after.goal_y - after.y);
    const double bonus = out.indicators[4] == 1.0 ? 1.0 : 0.0;
    const double expected = cfg.shaping_coef * (d_prev - d_now) + bonus;
    REQUIRE(out.reward == doctest::Approx(expected).epsilon(1e-12));
    if (bonus == 0.0 && d_now != d_prev) {
      // Shaping sign equals the sign of the distance decrease.
      REQUIRE(std::signbit(out.reward) == std::signbit(d_prev - d_now));
    }
    checked += 1;
    if (out.done) env.reset();
  }
}

TEST_CASE("energy follows the conservation law") {
  ArenaConfig cfg;
  MiniArena env(cfg, 23);
  env.reset();
  Rng rng(24);
  for (int t = 0; t < 2000; ++t) {
    const double e_before = env.state().energy;
    const Vec a = rng.uniform_vec(4, -1.0, 1.0);
    const StepOutcome out = env.step(a);
    const ArenaState s = env.state();
    const double speed = std::hypot(s.vx, s.vy);
    // Recharge is a no-op at full energy.
    const bool recharge = a[3] > 0.0 && e_before < 1.0;
    const double expected =
        std::clamp(e_before - cfg.energy_drain * speed +
                       (recharge ? cfg.recharge_rate : 0.0),
                   0.0, 1.0);
    REQUIRE(s.energy == doctest::Approx(expected).epsilon(1e-12));
    if (recharge) REQUIRE(speed == 0.0);  // recharge immobilises
    if (out.done) env.reset();
  }
}

TEST_CASE("fuzz: observations stay finite and within documented ranges") {
  MiniArena env(ArenaConfig{}, 31);
  Vec obs = env.reset();
  Rng rng(32);
  const auto& spec = env.observation_spec();
  for (long t = 0; t < 100000; ++t) {
    const StepOutcome out = env.step(rng.uniform_vec(4, -1.0, 1.0));
    obs = out.next_observation;
    int p = 0;
    for (const auto& f : spec) {
      for (int i = 0; i < f.size; ++i, ++p) {
        REQUIRE(std::isfinite(obs[p]));
        REQUIRE(obs[p] >= f.lo);
        REQUIRE(obs[p] <= f.hi);
      }
    }
    // Success implies done on the same step.
    if (out.indicators[4] == 1.0) REQUIRE(out.done);
    if (out.done) obs = env.reset();
  }
}

TEST_CASE("per-episode rate observations equal the running indicator means") {
  MiniArena env(ArenaConfig{}, 41);
  env.reset();
  Rng rng(42);
  Vec sums = Vec::Zero(4);
  int steps = 0;
  for (int t = 0; t < 3000; ++t) {
    const StepOutcome out = env.step(rng.uniform_vec(4, -1.0, 1.0));
    sums += out.indicators.head(4);
    steps += 1;
    const int dim = env.observation_dim();
    for (int k = 0; k < 4; ++k)
      REQUIRE(out.next_observation[dim - 5 + k] ==
              doctest::Approx(sums[k] / steps).epsilon(1e-12));
    if (out.done) {
      env.reset();
      sums.setZero();
      steps = 0;
    }
  }
}

TEST_CASE("out-of-range actions are clipped") {
  MiniArena a(ArenaConfig{}, 55), b(ArenaConfig{}, 55);
  a.reset();
  b.reset();
  const StepOutcome oa = a.step(action(5.0, -7.0, 2.0, -3.0));
  const StepOutcome ob = b.step(action(1.0, -1.0, 1.0, -1.0));
  CHECK(oa.next_observation == ob.next_observation);
  CHECK(oa.reward == ob.reward);
}

TEST_CASE("goal spawns exclude lava and respect the minimum distance") {
  ArenaConfig cfg;
  MiniArena env(cfg, 61);
  for (int ep = 0; ep < 200; ++ep) {
    env.reset();
    const ArenaState& s = env.state();
    CHECK_FALSE(env.in_lava(s.x, s.y));
    CHECK_FALSE(env.in_lava(s.goal_x, s.goal_y));
    CHECK(std::hypot(s.goal_x - s.x, s.goal_y - s.y) >=
          cfg.min_spawn_goal_dist);
  }
}

TEST_CASE("diagnostic env: impossible channel flips at the phase switch") {
  ArenaConfig cfg;
  DiagnosticConfig diag;
  diag.phase_switch_step = 50;
  DiagnosticArena env(cfg, diag, 71);
  env.reset();
  const auto& names = env.event_names();
  CHECK(names.back() == "impossible");
  CHECK(env.observation_dim() == MiniArena(cfg, 71).observation_dim() + 1);
  Rng rng(72);
  for (int t = 1; t <= 120; ++t) {
    Vec a = rng.uniform_vec(4, -1.0, 1.0);
    const StepOutcome out = env.step(a);
    const double e = out.indicators[out.indicators.size() - 1];
    if (t <= 50) {
      REQUIRE(e == 1.0);  // phase 1: fires every step
    } else {
      REQUIRE(e == (a[3] > 0.0 ? 1.0 : 0.0));  // phase 2: recharge-controlled
    }
    if (out.done) env.reset();
  }
}
