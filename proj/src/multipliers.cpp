#include "crl/multipliers.hpp"

#include <cmath>

namespace crl {

MultiplierBank::MultiplierBank(MultiplierMode mode, int num_constraints,
                               double z_init, const AdamConfig& adam)
    : mode_(mode), adam_(adam), adam_state_(num_constraints) {
  require(num_constraints >= 0, "negative constraint count");
  params_ = Vec::Constant(num_constraints, z_init);
  if (mode_ == MultiplierMode::UnnormalizedAblation)
    params_ = params_.cwiseMax(0.0);
}

Vec MultiplierBank::lambdas() const {
  const int n = num_constraints();
  Vec out(n + 1);
  if (mode_ == MultiplierMode::UnnormalizedAblation) {
    out[0] = 1.0;
    out.tail(n) = params_;
    return out;
  }
  // Softmax over {a0 = 0, z_1..z_n} with max-shift; lambda_0 is defined as
  // 1 - sum so the simplex identity holds to machine precision.
  double mx = 0.0;  // a0
  for (int i = 0; i < n; ++i) mx = std::max(mx, params_[i]);
  double denom = std::exp(-mx);
  Vec e(n);
  for (int i = 0; i < n; ++i) {
    e[i] = std::exp(params_[i] - mx);
    denom += e[i];
  }
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    out[i + 1] = e[i] / denom;
    sum += out[i + 1];
  }
  out[0] = 1.0 - sum;
  return out;
}

double MultiplierBank::bootstrap_weight(double lambda0, double lambda_success,
                                        bool use_bootstrap) {
  return use_bootstrap ? std::max(lambda0, lambda_success) : lambda0;
}

Vec constraint_coefficients(const Vec& rates, const TaskSpec& task) {
  require(rates.size() == task.num_indicators(),
          "constraint_coefficients: arity mismatch");
  Vec c(rates.size());
  for (int i = 0; i < task.num_indicators(); ++i) {
    const ConstraintSpec& spec = task.indicator_spec(i);
    c[i] = spec.kind == BoundKind::UpperBound ? spec.threshold - rates[i]
                                              : rates[i] - spec.threshold;
  }
  return c;
}

Vec MultiplierBank::objective_gradient(const Vec& rates,
                                       const TaskSpec& task) const {
  const Vec c = constraint_coefficients(rates, task);
  require(c.size() == params_.size(), "bank/task arity mismatch");
  if (mode_ == MultiplierMode::UnnormalizedAblation) return c;
  const Vec lam = lambdas();
  const Vec lk = lam.tail(params_.size());
  const double mix = lk.dot(c);
  return lk.array() * (c.array() - mix);
}

void MultiplierBank::update(const Vec& rates, const TaskSpec& task) {
  const Vec grad = objective_gradient(rates, task);
  adam_step(params_, grad, adam_state_, adam_);
  if (!params_.allFinite())
    throw DivergenceError("multiplier parameters went non-finite");
  if (mode_ == MultiplierMode::UnnormalizedAblation)
    params_ = params_.cwiseMax(0.0);
}

void MultiplierBank::set_base_params(const Vec& p) {
  require(p.size() == params_.size(), "set_base_params: size mismatch");
  params_ = p;
}

}  // namespace crl
