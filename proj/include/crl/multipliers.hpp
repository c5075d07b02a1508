#pragma once

#include "crl/cmdp.hpp"
#include "crl/net.hpp"
#include "crl/types.hpp"

namespace crl {

enum class MultiplierMode { Normalized, UnnormalizedAblation };

/// Adam settings for the multiplier parameters. The moment horizons are
/// matched to the multiplier update cadence (about a hundred updates per
/// desk-scale run) so the multipliers can reverse within a few updates of a
/// constraint flipping between violated and satisfied instead of being pinned
/// by stale violation-phase magnitudes.
inline AdamConfig multiplier_adam(double lr) { return {lr, 0.5, 0.8, 1e-8}; }

/// Lagrange multiplier bank. In normalized mode the multipliers are a softmax
/// over base parameters z_1..z_n together with a fixed anchor a0 = 0, so
/// lambda_0 + sum_k lambda_k = 1 and every multiplier stays in (0,1). The
/// ablation mode keeps raw lambda_k >= 0 via max-clipping after each update.
class MultiplierBank {
 public:
  MultiplierBank() = default;
  MultiplierBank(MultiplierMode mode, int num_constraints, double z_init,
                 const AdamConfig& adam);

  MultiplierMode mode() const { return mode_; }
  int num_constraints() const { return static_cast<int>(params_.size()); }

  /// lambda_0 followed by lambda_1..lambda_n. In normalized mode these lie on
  /// the simplex; in ablation mode lambda_0 is the constant 1 (the main
  /// objective keeps unit weight) and the rest are the raw multipliers.
  Vec lambdas() const;

  /// Weight applied to the main reward term in the policy objective:
  /// max(lambda_0, lambda_success) when the bootstrap constraint is active,
  /// lambda_0 otherwise.
  static double bootstrap_weight(double lambda0, double lambda_success,
                                 bool use_bootstrap);

  /// One Adam descent step on the summed per-constraint objectives
  ///   sum_k lambda_k * c_k,
  /// where c_k = threshold_k - rate_k for upper bounds and
  /// c_k = rate_k - threshold_k for the lower-bound success constraint.
  /// Normalized mode differentiates through the full softmax Jacobian.
  void update(const Vec& rates, const TaskSpec& task);

  /// Analytic gradient of the summed objective with respect to the base
  /// parameters (z in normalized mode, raw lambda in ablation mode).
  Vec objective_gradient(const Vec& rates, const TaskSpec& task) const;

  const Vec& base_params() const { return params_; }
  void set_base_params(const Vec& p);
  const AdamState& adam_state() const { return adam_state_; }
  void set_adam_state(AdamState s) { adam_state_ = std::move(s); }

 private:
  MultiplierMode mode_ = MultiplierMode::Normalized;
  Vec params_;  // z in normalized mode, raw lambda in ablation mode
  AdamConfig adam_;
  AdamState adam_state_;
};

/// Per-constraint coefficients c_k of the multiplier objective.
Vec constraint_coefficients(const Vec& rates, const TaskSpec& task);

}  // namespace crl
