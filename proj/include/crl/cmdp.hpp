#pragma once

#include "crl/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace crl {

enum class BoundKind { UpperBound, LowerBound };

/// One indicator-event constraint: the event's long-run rate must stay on the
/// stated side of the threshold.
struct ConstraintSpec {
  std::string name;
  BoundKind kind = BoundKind::UpperBound;
  double threshold = 0.0;        // target rate in [0,1]
  double critic_discount = 0.9;  // discount for this event's critic head
};

/// K behavioral upper-bound constraints plus an optional lower-bound success
/// constraint. Indicator index i in [0, num_indicators) maps to behavioral
/// constraints first, success last; critic head i+1 learns indicator i and
/// head 0 learns the main reward.
struct TaskSpec {
  std::vector<ConstraintSpec> behavioral;
  std::optional<ConstraintSpec> success;
  double gamma = 0.9;
  bool use_bootstrap = false;

  int num_behavioral() const { return static_cast<int>(behavioral.size()); }
  int num_indicators() const { return num_behavioral() + (success ? 1 : 0); }
  int num_heads() const { return 1 + num_indicators(); }
  bool has_success() const { return success.has_value(); }
  int success_index() const { return num_behavioral(); }

  const ConstraintSpec& indicator_spec(int i) const {
    if (i < num_behavioral()) return behavioral[i];
    return *success;
  }

  void validate() const;
};

/// One environment transition as seen by the agent. `indicators` holds every
/// indicator event the environment emits (0/1 each); `done` marks episode
/// end and `truncated` distinguishes the time-limit case from a terminal
/// state.
struct StepOutcome {
  Vec next_observation;
  double reward = 0.0;
  Vec indicators;
  bool done = false;
  bool truncated = false;
};

struct FieldSpec {
  std::string name;
  int size = 1;
  double lo = 0.0;
  double hi = 1.0;
};

/// Environment interface: reset/step plus static metadata.
class Env {
 public:
  virtual ~Env() = default;
  virtual Vec reset() = 0;
  virtual StepOutcome step(const Vec& action) = 0;
  virtual int observation_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual const std::vector<FieldSpec>& observation_spec() const = 0;
  virtual const std::vector<FieldSpec>& action_spec() const = 0;
  virtual const std::vector<std::string>& event_names() const = 0;
};

/// Maps the task's constraint order onto the environment's event channels.
class IndicatorBinding {
 public:
  IndicatorBinding() = default;
  IndicatorBinding(const TaskSpec& task,
                   const std::vector<std::string>& event_names);

  /// Extracts the task-ordered indicator vector from an env event vector.
  Vec select(const Vec& env_events) const;
  int arity() const { return static_cast<int>(indices_.size()); }

 private:
  std::vector<int> indices_;
};

/// Batch mean of each indicator: component k is the fraction of samples in
/// which event k fired. Columns are samples.
Vec estimate_cost_rates(const Mat& indicator_batch);
Vec estimate_cost_rates(const std::vector<Vec>& indicator_batch);

/// True iff every upper-bound rate is <= threshold + tolerance and every
/// lower-bound rate is >= threshold - tolerance.
bool is_feasible(const Vec& rates, const TaskSpec& task, double tolerance);

/// Default absolute tolerance used in reports (evaluation noise at
/// 10-episode granularity).
constexpr double kReportFeasibilityTolerance = 0.02;

}  // namespace crl
