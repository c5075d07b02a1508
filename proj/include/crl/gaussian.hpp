#pragma once

#include "crl/types.hpp"

namespace crl {

constexpr double kLogStdMin = -20.0;
constexpr double kLogStdMax = 2.0;
constexpr double kSquashEps = 1e-6;

/// Diagonal Gaussian over pre-squash actions. log_std is expected to be
/// already clamped to [kLogStdMin, kLogStdMax] by the producer.
struct GaussianHead {
  Vec mean;
  Vec log_std;
  int dim() const { return static_cast<int>(mean.size()); }
};

struct SquashedSample {
  Vec action;       // tanh(mean + sigma*noise), in (-1,1)^d
  double log_prob;  // Gaussian log-density minus tanh log-det correction
  Vec pre_squash;
};

/// Reparameterised squashed sample for a fixed standard-normal noise vector.
SquashedSample sample_squashed(const GaussianHead& head, const Vec& noise);

/// Deterministic (greedy) action: tanh(mean).
Vec greedy_action(const GaussianHead& head);

/// Log-density of the squashed distribution at the given action.
double squashed_log_prob(const GaussianHead& head, const Vec& action);

/// Partial derivatives of log_prob and action with respect to mean and
/// log_std at fixed noise (diagonal structure, one entry per action dim).
struct SquashedGrads {
  Vec dlogp_dmean;
  Vec dlogp_dlogstd;
  Vec daction_dmean;    // = 1 - tanh(u)^2
  Vec daction_dlogstd;  // = (1 - tanh(u)^2) * sigma * noise
};

SquashedGrads squashed_grads(const GaussianHead& head, const Vec& noise);

}  // namespace crl
