#include "crl/cmdp.hpp"

#include <algorithm>
#include <set>

namespace crl {

void TaskSpec::validate() const {
  std::set<std::string> names;
  for (const auto& c : behavioral) {
    require(!c.name.empty(), "constraint name must be non-empty");
    require(names.insert(c.name).second, "duplicate constraint name: " + c.name);
    require(c.kind == BoundKind::UpperBound,
            "behavioral constraints must be upper bounds: " + c.name);
    require(c.threshold >= 0.0 && c.threshold <= 1.0,
            "threshold out of [0,1]: " + c.name);
    require(c.critic_discount >= 0.0 && c.critic_discount < 1.0,
            "critic discount out of [0,1): " + c.name);
  }
  if (success) {
    require(!success->name.empty(), "success constraint name must be non-empty");
    require(names.insert(success->name).second,
            "duplicate constraint name: " + success->name);
    require(success->kind == BoundKind::LowerBound,
            "success constraint must be a lower bound");
    require(success->threshold >= 0.0 && success->threshold <= 1.0,
            "success threshold out of [0,1]");
    require(success->critic_discount >= 0.0 && success->critic_discount < 1.0,
            "success critic discount out of [0,1)");
  }
  require(gamma >= 0.0 && gamma < 1.0, "gamma out of [0,1)");
  if (use_bootstrap)
    require(success.has_value(), "bootstrap requires a success constraint");
}

IndicatorBinding::IndicatorBinding(const TaskSpec& task,
                                   const std::vector<std::string>& event_names) {
  auto find = [&](const std::string& name) {
    auto it = std::find(event_names.begin(), event_names.end(), name);
    require(it != event_names.end(),
            "constraint '" + name + "' has no matching environment event");
    return static_cast<int>(it - event_names.begin());
  };
  indices_.reserve(task.num_indicators());
  for (const auto& c : task.behavioral) indices_.push_back(find(c.name));
  if (task.success) indices_.push_back(find(task.success->name));
}

Vec IndicatorBinding::select(const Vec& env_events) const {
  Vec out(static_cast<Eigen::Index>(indices_.size()));
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    require(indices_[i] < env_events.size(), "event vector too short");
    out[static_cast<Eigen::Index>(i)] = env_events[indices_[i]];
  }
  return out;
}

Vec estimate_cost_rates(const Mat& indicator_batch) {
  if (indicator_batch.cols() == 0)
    throw std::invalid_argument("estimate_cost_rates: empty batch");
  return indicator_batch.rowwise().mean();
}

Vec estimate_cost_rates(const std::vector<Vec>& indicator_batch) {
  if (indicator_batch.empty())
    throw std::invalid_argument("estimate_cost_rates: empty batch");
  Mat m(indicator_batch.front().size(),
        static_cast<Eigen::Index>(indicator_batch.size()));
  for (std::size_t j = 0; j < indicator_batch.size(); ++j)
    m.col(static_cast<Eigen::Index>(j)) = indicator_batch[j];
  return estimate_cost_rates(m);
}

bool is_feasible(const Vec& rates, const TaskSpec& task, double tolerance) {
  require(rates.size() == task.num_indicators(),
          "is_feasible: rate vector arity mismatch");
  for (int i = 0; i < task.num_indicators(); ++i) {
    const ConstraintSpec& c = task.indicator_spec(i);
    if (c.kind == BoundKind::UpperBound) {
      if (rates[i] > c.threshold + tolerance) return false;
    } else {
      if (rates[i] < c.threshold - tolerance) return false;
    }
  }
  return true;
}

}  // namespace crl
