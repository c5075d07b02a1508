#pragma once

#include "crl/cmdp.hpp"
#include "crl/gaussian.hpp"
#include "crl/multipliers.hpp"
#include "crl/net.hpp"
#include "crl/replay.hpp"
#include "crl/rng.hpp"

#include <functional>
#include <vector>

namespace crl {

enum class LogStdMode { StateDependent, Global };
enum class ActMode { Random, Explore, Greedy };

/// Initial policy log standard deviation (bias of the log-std head).
constexpr double kLogStdInit = -1.0;

struct AgentConfig {
  double gamma = 0.9;
  double alpha = 0.02;
  double tau = 0.005;
  double lr = 3e-4;
  double multiplier_lr = 0.03;
  int batch_theta = 256;     // N_theta: uniform minibatch for agent updates
  int batch_lambda = 2000;   // N_lambda: last-N window for multiplier updates
  int period_theta = 200;    // M_theta: env steps between agent updates
  int period_lambda = 2000;  // M_lambda: env steps between multiplier updates
  long random_steps = 10000;
  long warmup_steps = 2560;
  std::vector<int> hidden = {64, 64};
  long buffer_capacity = 1000000;
  double z_init = 0.02;
  LogStdMode log_std_mode = LogStdMode::StateDependent;

  void validate() const;
};

/// Squashed-Gaussian policy: a tanh trunk (layer-normalised first hidden
/// layer) producing per-dimension mean and log-std, or mean only with a
/// trainable global log-std vector.
class PolicyModel {
 public:
  PolicyModel() = default;
  PolicyModel(int obs_dim, int action_dim, const std::vector<int>& hidden,
              LogStdMode mode, Rng& init_rng);

  GaussianHead head(const Vec& obs) const;

  struct BatchHeads {
    Mat mean;        // d x N
    Mat log_std;     // d x N, clamped to [kLogStdMin, kLogStdMax]
    Mat clamp_mask;  // 1 where the clamp passes gradient, else 0
  };
  BatchHeads heads(const Mat& obs) const;

  /// Flat parameter gradient for per-sample gradients with respect to the
  /// clamped head outputs. Clamp masking is applied internally.
  Vec backward(const Mat& obs, const Mat& dmean, const Mat& dlog_std) const;

  int action_dim() const { return action_dim_; }
  int obs_dim() const { return trunk_.input_dim(); }
  LogStdMode mode() const { return mode_; }
  const DenseNet& trunk() const { return trunk_; }
  DenseNet& trunk() { return trunk_; }
  const Vec& global_log_std() const { return global_log_std_; }

  long param_count() const;
  Vec params_flat() const;  // trunk params, then global log-std if present
  void set_params_flat(const Vec& flat);

 private:
  DenseNet trunk_;
  Vec global_log_std_;
  LogStdMode mode_ = LogStdMode::StateDependent;
  int action_dim_ = 0;
};

/// Twin online critics with twin targets for one reward/cost head.
struct TwinCritic {
  DenseNet online[2];
  DenseNet target[2];
  AdamState adam[2];
};

struct AgentUpdateInfo {
  Vec critic_losses;  // per head, mean over the two twins
  double policy_loss = 0.0;
};

struct MultiplierUpdateInfo {
  Vec rates;          // batch cost estimates, task order
  Vec lambdas_after;  // lambda_0 .. lambda_n after the update
  Vec base_params_after;
  double simplex_error = 0.0;
};

struct StepMetrics {
  bool updated_agent = false;
  AgentUpdateInfo agent;
  bool updated_multipliers = false;
  MultiplierUpdateInfo multipliers;
  bool episode_ended = false;
  double episode_return = 0.0;
  bool episode_success = false;
  int episode_length = 0;
};

/// Constrained soft actor-critic: one policy, twin critics with twin targets
/// for the reward head and every indicator head, trained on the interaction
/// and update schedule of the Lagrangian loop.
///
/// Random streams (documented so independent reimplementations can match the
/// trajectory bit for bit):
///   derive_seed(seed, "sac-init")   network initialisation, in construction
///                                   order: policy trunk, then heads 0..H-1
///                                   twin 0 then twin 1
///   derive_seed(seed, "sac-act")    one uniform_vec (random mode) or
///                                   normal_vec (explore mode) per env step
///   derive_seed(seed, "sac-update") per agent update: N_theta index draws,
///                                   then d*N next-action normals, then d*N
///                                   re-sample normals (column-major)
class SacLagrangian {
 public:
  SacLagrangian(AgentConfig config, TaskSpec task, int obs_dim, int action_dim,
                std::uint64_t seed);

  Vec act(const Vec& obs, ActMode mode, Rng& rng) const;
  ActMode mode_for_step(long step) const {
    return step < config_.random_steps ? ActMode::Random : ActMode::Explore;
  }

  /// One environment interaction plus any scheduled updates.
  StepMetrics train_step(Env& env, ReplayBuffer& buffer, MultiplierBank& bank);

  /// Critic regression targets: r_k + (1-done)*gamma_k*(-alpha*logp' + minQ').
  static Vec q_regression_targets(const Vec& head_rewards,
                                  const std::vector<std::uint8_t>& done,
                                  double gamma_k, double alpha,
                                  const Vec& logp_next, const Vec& min_target_q);

  /// Samples next actions from the current policy and returns the regression
  /// targets for one head.
  Vec compute_q_targets(const std::vector<const TransitionRecord*>& batch,
                        int head, Rng& rng) const;

  AgentUpdateInfo update_agent(const std::vector<const TransitionRecord*>& batch,
                               const MultiplierBank& bank);
  MultiplierUpdateInfo update_multipliers(const ReplayBuffer& buffer,
                                          MultiplierBank& bank);

  /// Signed head weights for the policy objective: entry 0 weighs the reward
  /// head (bootstrap-aware), behavioral heads enter negatively, the success
  /// head positively.
  Vec head_weights(const MultiplierBank& bank) const;

  struct PolicyEval {
    double objective = 0.0;
    Vec grad;  // d(objective)/d(policy params), flat
  };
  /// Mean per-sample objective -alpha*logp + sum_h w_h min_j Q_h(s, a(noise))
  /// with fixed reparameterisation noise; critics held constant.
  PolicyEval policy_objective(const Mat& obs, const Mat& noise,
                              const Vec& weights) const;

  const AgentConfig& config() const { return config_; }
  const TaskSpec& task() const { return task_; }
  int num_heads() const { return task_.num_heads(); }
  long step_count() const { return step_count_; }
  PolicyModel& policy() { return policy_; }
  const PolicyModel& policy() const { return policy_; }
  std::vector<TwinCritic>& critics() { return critics_; }
  const std::vector<TwinCritic>& critics() const { return critics_; }
  AdamState& policy_adam() { return policy_adam_; }
  const AdamState& policy_adam() const { return policy_adam_; }

  bool freeze_multipliers = false;
  /// Optional transform of (env reward, env events) into the stored reward;
  /// the reward-engineering baseline installs its penalty here.
  std::function<double(double, const Vec&)> reward_hook;

  double head_discount(int head) const;

 private:
  void maybe_reset(Env& env);

  AgentConfig config_;
  TaskSpec task_;
  IndicatorBinding binding_;
  bool binding_ready_ = false;
  PolicyModel policy_;
  AdamState policy_adam_;
  std::vector<TwinCritic> critics_;
  Rng act_rng_;
  Rng update_rng_;
  long step_count_ = 0;

  Vec current_obs_;
  bool need_reset_ = true;
  double episode_return_ = 0.0;
  int episode_length_ = 0;
  bool episode_success_ = false;
};

}  // namespace crl
