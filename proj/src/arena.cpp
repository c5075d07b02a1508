#include "crl/arena.hpp"

#include <cmath>
#include <iostream>

namespace crl {

namespace {

double wrap_angle(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a < -M_PI) a += 2.0 * M_PI;
  return a;
}

const std::vector<std::string> kEventNames = {
    "in_lava", "not_looking", "above_speed", "below_energy", "reached_goal"};

}  // namespace

std::vector<LavaRect> ArenaConfig::default_lava_layout() {
  // Scattered patches leave wide lava-free routes between any spawn/goal
  // pair while random walks still clip them regularly.
  return {{0.20, 0.60, 0.32, 0.72}, {0.50, 0.25, 0.62, 0.37},
          {0.72, 0.62, 0.84, 0.74}};
}

void ArenaConfig::validate() const {
  require(episode_length >= 1, "episode_length must be >= 1");
  require(goal_radius > 0.0 && goal_radius < 0.5, "goal_radius out of (0,0.5)");
  require(speed_limit > 0.0, "speed_limit must be positive");
  require(fov_half_angle > 0.0 && fov_half_angle <= M_PI, "fov out of range");
  require(energy_drain >= 0.0 && recharge_rate >= 0.0, "negative energy rates");
  require(min_energy >= 0.0 && min_energy <= 1.0, "min_energy out of [0,1]");
  require(drag >= 0.0 && drag < 1.0, "drag out of [0,1)");
  require(accel > 0.0 && turn_rate >= 0.0, "bad kinematics constants");
  require(shaping_coef >= 0.0, "negative shaping_coef");
  for (const auto& r : lava)
    require(r.x0 <= r.x1 && r.y0 <= r.y1, "degenerate lava rectangle");
}

MiniArena::MiniArena(ArenaConfig config, std::uint64_t seed)
    : config_(std::move(config)), rng_(derive_seed(seed, "arena")) {
  config_.validate();
  episode_event_sums_ = Vec::Zero(4);

  obs_spec_ = {
      {"goal_rel", 2, -1.0, 1.0},
      {"goal_dist", 1, 0.0, std::sqrt(2.0)},
      {"velocity", 2, -0.35, 0.35},
      {"marker_angle", 1, -1.0, 1.0},
      {"marker_in_fov", 1, 0.0, 1.0},
      {"energy", 1, 0.0, 1.0},
      {"recharging", 1, 0.0, 1.0},
      {"lava_probes", 9, 0.0, 1.0},
      {"event_rates", 4, 0.0, 1.0},
      {"time_left", 1, 0.0, 1.0},
  };
  act_spec_ = {
      {"accel_x", 1, -1.0, 1.0},
      {"accel_y", 1, -1.0, 1.0},
      {"turn", 1, -1.0, 1.0},
      {"recharge", 1, -1.0, 1.0},
  };
  reset();
}

int MiniArena::observation_dim() const {
  int n = 0;
  for (const auto& f : obs_spec_) n += f.size;
  return n;
}

const std::vector<FieldSpec>& MiniArena::observation_spec() const {
  return obs_spec_;
}

const std::vector<FieldSpec>& MiniArena::action_spec() const {
  return act_spec_;
}

const std::vector<std::string>& MiniArena::event_names() const {
  return kEventNames;
}

bool MiniArena::in_lava(double x, double y) const {
  for (const auto& r : config_.lava)
    if (r.contains(x, y)) return true;
  return false;
}

Vec MiniArena::sample_free_point(double min_dist_from, double ox, double oy) {
  const double m = config_.spawn_lava_margin;
  for (int tries = 0; tries < 10000; ++tries) {
    const double x = rng_.uniform();
    const double y = rng_.uniform();
    bool near_lava = false;
    for (const auto& r : config_.lava) {
      if (x >= r.x0 - m && x <= r.x1 + m && y >= r.y0 - m && y <= r.y1 + m) {
        near_lava = true;
        break;
      }
    }
    if (near_lava) continue;
    if (min_dist_from > 0.0 && std::hypot(x - ox, y - oy) < min_dist_from)
      continue;
    Vec p(2);
    p << x, y;
    return p;
  }
  throw ConfigError("arena spawn sampling failed: lava covers the arena?");
}

Vec MiniArena::reset() {
  const Vec agent = sample_free_point(0.0, 0.0, 0.0);
  const Vec goal = sample_free_point(config_.min_spawn_goal_dist, agent[0], agent[1]);
  state_ = ArenaState{};
  state_.x = agent[0];
  state_.y = agent[1];
  state_.goal_x = goal[0];
  state_.goal_y = goal[1];
  // Spawn roughly marker-ward; tracking the marker while moving is the
  // constraint's content, not recovering from an arbitrary initial spin.
  const double bearing =
      std::atan2(config_.marker_y - state_.y, config_.marker_x - state_.x);
  state_.heading = wrap_angle(bearing + rng_.uniform(-1.2, 1.2));
  episode_event_sums_.setZero();
  return observation();
}

void MiniArena::set_state(const ArenaState& s) {
  state_ = s;
  episode_event_sums_.setZero();
}

Vec MiniArena::observation() const {
  Vec obs(observation_dim());
  int p = 0;
  obs[p++] = state_.goal_x - state_.x;
  obs[p++] = state_.goal_y - state_.y;
  obs[p++] = std::hypot(state_.goal_x - state_.x, state_.goal_y - state_.y);
  obs[p++] = state_.vx;
  obs[p++] = state_.vy;
  const double bearing =
      std::atan2(config_.marker_y - state_.y, config_.marker_x - state_.x);
  const double angle = wrap_angle(bearing - state_.heading);
  obs[p++] = angle / M_PI;
  obs[p++] = std::abs(angle) <= config_.fov_half_angle ? 1.0 : 0.0;
  obs[p++] = state_.energy;
  obs[p++] = state_.recharging ? 1.0 : 0.0;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx)
      obs[p++] = in_lava(state_.x + dx * config_.probe_spacing,
                         state_.y + dy * config_.probe_spacing)
                     ? 1.0
                     : 0.0;
  for (int k = 0; k < 4; ++k)
    obs[p++] = state_.step > 0 ? episode_event_sums_[k] / state_.step : 0.0;
  obs[p++] = static_cast<double>(config_.episode_length - state_.step) /
             config_.episode_length;
  return obs;
}

StepOutcome MiniArena::step(const Vec& action) {
  require(action.size() == action_dim(), "arena action dimension mismatch");
  Vec a = action;
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] < -1.0 || a[i] > 1.0) {
      if (!clip_warned_) {
        std::cerr << "[arena] action out of [-1,1], clipping (reported once)\n";
        clip_warned_ = true;
      }
      a[i] = std::clamp(a[i], -1.0, 1.0);
    }
  }

  const double d_prev =
      std::hypot(state_.goal_x - state_.x, state_.goal_y - state_.y);

  // Recharging is a no-op at full energy, so it cannot serve as a free
  // freeze-in-place action.
  const bool recharge = a[3] > 0.0 && state_.energy < 1.0;
  if (recharge) {
    state_.vx = 0.0;
    state_.vy = 0.0;
  } else {
    state_.vx = (1.0 - config_.drag) * state_.vx + config_.accel * a[0];
    state_.vy = (1.0 - config_.drag) * state_.vy + config_.accel * a[1];
  }
  state_.heading = wrap_angle(state_.heading + config_.turn_rate * a[2]);

  double nx = state_.x + state_.vx;
  double ny = state_.y + state_.vy;
  if (nx < 0.0 || nx > 1.0) {
    nx = std::clamp(nx, 0.0, 1.0);
    state_.vx = 0.0;
  }
  if (ny < 0.0 || ny > 1.0) {
    ny = std::clamp(ny, 0.0, 1.0);
    state_.vy = 0.0;
  }
  state_.x = nx;
  state_.y = ny;

  const double speed = std::hypot(state_.vx, state_.vy);
  state_.energy = std::clamp(state_.energy - config_.energy_drain * speed +
                                 (recharge ? config_.recharge_rate : 0.0),
                             0.0, 1.0);
  state_.recharging = recharge;
  state_.step += 1;

  const double d_now =
      std::hypot(state_.goal_x - state_.x, state_.goal_y - state_.y);
  const double bearing =
      std::atan2(config_.marker_y - state_.y, config_.marker_x - state_.x);
  const double gaze = wrap_angle(bearing - state_.heading);

  Vec events = Vec::Zero(kNumEvents);
  events[0] = in_lava(state_.x, state_.y) ? 1.0 : 0.0;
  events[1] = std::abs(gaze) > config_.fov_half_angle ? 1.0 : 0.0;
  events[2] = speed > config_.speed_limit ? 1.0 : 0.0;
  events[3] = state_.energy < config_.min_energy ? 1.0 : 0.0;
  const bool success = d_now <= config_.goal_radius;
  events[4] = success ? 1.0 : 0.0;

  episode_event_sums_ += events.head(4);

  StepOutcome out;
  out.reward = config_.shaping_coef * (d_prev - d_now) + (success ? 1.0 : 0.0);
  out.indicators = events;
  out.done = success || state_.step >= config_.episode_length;
  out.truncated = !success && state_.step >= config_.episode_length;
  out.next_observation = observation();
  return out;
}

// ---------------------------------------------------------------------------

DiagnosticArena::DiagnosticArena(ArenaConfig config, DiagnosticConfig diag,
                                 std::uint64_t seed)
    : inner_(std::move(config), seed), diag_(diag) {
  diag_.validate();
  obs_spec_ = inner_.observation_spec();
  obs_spec_.push_back({"impossible_rate", 1, 0.0, 1.0});
}

const std::vector<FieldSpec>& DiagnosticArena::observation_spec() const {
  return obs_spec_;
}

const std::vector<std::string>& DiagnosticArena::event_names() const {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n = kEventNames;
    n.push_back("impossible");
    return n;
  }();
  return names;
}

Vec DiagnosticArena::extend(const Vec& obs) const {
  Vec out(obs.size() + 1);
  out.head(obs.size()) = obs;
  out[obs.size()] =
      episode_steps_ > 0 ? episode_event_sum_ / episode_steps_ : 0.0;
  return out;
}

Vec DiagnosticArena::reset() {
  episode_event_sum_ = 0.0;
  episode_steps_ = 0;
  return extend(inner_.reset());
}

StepOutcome DiagnosticArena::step(const Vec& action) {
  StepOutcome out = inner_.step(action);
  total_steps_ += 1;
  const bool phase1 = total_steps_ <= diag_.phase_switch_step;
  const double impossible = phase1 ? 1.0 : (action[3] > 0.0 ? 1.0 : 0.0);
  episode_event_sum_ += impossible;
  episode_steps_ += 1;

  Vec events(out.indicators.size() + 1);
  events.head(out.indicators.size()) = out.indicators;
  events[out.indicators.size()] = impossible;
  out.indicators = events;
  out.next_observation = extend(out.next_observation);
  return out;
}

}  // namespace crl
