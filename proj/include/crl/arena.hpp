#pragma once

#include "crl/cmdp.hpp"
#include "crl/rng.hpp"
#include "crl/types.hpp"

#include <cstdint>
#include <vector>

namespace crl {

struct LavaRect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  bool contains(double x, double y) const {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
};

/// Continuous 2D navigation in the unit square: reach the goal while four
/// indicator events (lava, marker gaze, speed, energy) report on behavior.
/// All dynamics constants are declared desk-scale defaults.
struct ArenaConfig {
  int episode_length = 150;
  double goal_radius = 0.2;
  std::vector<LavaRect> lava = default_lava_layout();
  double marker_x = 0.5, marker_y = 1.8;  // outside the square: bearing always defined
  double fov_half_angle = 0.8;
  double speed_limit = 0.22;
  double energy_drain = 0.08;  // per unit distance moved
  double recharge_rate = 0.3;
  double min_energy = 0.2;
  double shaping_coef = 0.35;
  double accel = 0.2;
  double drag = 0.65;
  double turn_rate = 0.5;
  double min_spawn_goal_dist = 0.25;
  double spawn_lava_margin = 0.06;  // spawns keep this distance from lava
  double probe_spacing = 0.1;       // 3x3 lava probe grid offset

  static std::vector<LavaRect> default_lava_layout();
  void validate() const;
};

struct ArenaState {
  double x = 0.5, y = 0.5;
  double vx = 0.0, vy = 0.0;
  double heading = 0.0;
  double energy = 1.0;
  int step = 0;
  double goal_x = 0.5, goal_y = 0.5;
  bool recharging = false;  // true if the last step was a recharge step
};

/// Event channel order: in_lava, not_looking, above_speed, below_energy,
/// reached_goal.
class MiniArena : public Env {
 public:
  MiniArena(ArenaConfig config, std::uint64_t seed);

  Vec reset() override;
  StepOutcome step(const Vec& action) override;

  int observation_dim() const override;
  int action_dim() const override { return 4; }
  const std::vector<FieldSpec>& observation_spec() const override;
  const std::vector<FieldSpec>& action_spec() const override;
  const std::vector<std::string>& event_names() const override;

  const ArenaConfig& config() const { return config_; }
  const ArenaState& state() const { return state_; }
  /// Test/replay hook; episode rate accumulators are reset.
  void set_state(const ArenaState& s);

  bool in_lava(double x, double y) const;
  Vec observation() const;

  static constexpr int kNumEvents = 5;

 private:
  Vec sample_free_point(double min_dist_from, double ox, double oy);

  ArenaConfig config_;
  Rng rng_;
  ArenaState state_;
  Vec episode_event_sums_;  // behavioral events only (4 entries)
  bool clip_warned_ = false;
  std::vector<FieldSpec> obs_spec_;
  std::vector<FieldSpec> act_spec_;
};

/// Two-phase diagnostic wrapper: appends an "impossible" event channel that
/// fires on every step until the global step counter reaches the switch
/// point, after which it fires only while the recharge action is engaged (a
/// condition the agent trivially controls).
struct DiagnosticConfig {
  long phase_switch_step = 50000;
  void validate() const { require(phase_switch_step >= 0, "phase switch < 0"); }
};

class DiagnosticArena : public Env {
 public:
  DiagnosticArena(ArenaConfig config, DiagnosticConfig diag, std::uint64_t seed);

  Vec reset() override;
  StepOutcome step(const Vec& action) override;

  int observation_dim() const override { return inner_.observation_dim() + 1; }
  int action_dim() const override { return inner_.action_dim(); }
  const std::vector<FieldSpec>& observation_spec() const override;
  const std::vector<FieldSpec>& action_spec() const override {
    return inner_.action_spec();
  }
  const std::vector<std::string>& event_names() const override;

  long total_steps() const { return total_steps_; }

 private:
  Vec extend(const Vec& obs) const;

  MiniArena inner_;
  DiagnosticConfig diag_;
  long total_steps_ = 0;  // lifetime counter across episodes
  double episode_event_sum_ = 0.0;
  int episode_steps_ = 0;
  std::vector<FieldSpec> obs_spec_;
};

}  // namespace crl
