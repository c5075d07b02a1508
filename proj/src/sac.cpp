#include "crl/sac.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace crl {

namespace {
constexpr double kHalfLog2Pi = 0.9189385332046727;
}

void AgentConfig::validate() const {
  require(gamma >= 0.0 && gamma < 1.0, "gamma out of [0,1)");
  require(alpha >= 0.0, "alpha must be >= 0");
  require(tau >= 0.0 && tau <= 1.0, "tau out of [0,1]");
  require(lr > 0.0 && multiplier_lr > 0.0, "learning rates must be positive");
  require(batch_theta >= 1 && batch_lambda >= 1, "batch sizes must be >= 1");
  require(period_theta >= 1 && period_lambda >= 1, "update periods must be >= 1");
  require(random_steps >= 0 && warmup_steps >= 0, "negative step counts");
  require(buffer_capacity >= std::max(batch_theta, batch_lambda),
          "buffer capacity smaller than largest batch");
  require(!hidden.empty(), "at least one hidden layer");
}

// ---------------------------------------------------------------------------
// PolicyModel

PolicyModel::PolicyModel(int obs_dim, int action_dim,
                         const std::vector<int>& hidden, LogStdMode mode,
                         Rng& init_rng)
    : mode_(mode), action_dim_(action_dim) {
  std::vector<int> sizes;
  sizes.push_back(obs_dim);
  for (int h : hidden) sizes.push_back(h);
  sizes.push_back(mode == LogStdMode::StateDependent ? 2 * action_dim
                                                     : action_dim);
  trunk_ = DenseNet(sizes, Activation::Tanh, /*layer_norm_first=*/true);
  trunk_.init_params(init_rng);
  // Exploration starts at sigma = exp(kLogStdInit) rather than 1.
  if (mode_ == LogStdMode::StateDependent) {
    const int last = trunk_.num_layers() - 1;
    trunk_.bias(last).tail(action_dim).setConstant(kLogStdInit);
  } else {
    global_log_std_ = Vec::Constant(action_dim, kLogStdInit);
  }
}

GaussianHead PolicyModel::head(const Vec& obs) const {
  const Vec out = trunk_.forward(obs);
  GaussianHead h;
  h.mean = out.head(action_dim_);
  if (mode_ == LogStdMode::StateDependent)
    h.log_std = out.tail(action_dim_).cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  else
    h.log_std = global_log_std_.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  return h;
}

PolicyModel::BatchHeads PolicyModel::heads(const Mat& obs) const {
  const Mat out = trunk_.forward(obs);
  BatchHeads h;
  h.mean = out.topRows(action_dim_);
  if (mode_ == LogStdMode::StateDependent) {
    Mat raw = out.bottomRows(action_dim_);
    h.log_std = raw.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
    h.clamp_mask = ((raw.array() > kLogStdMin) && (raw.array() < kLogStdMax))
                       .cast<double>();
  } else {
    h.log_std = global_log_std_.cwiseMax(kLogStdMin)
                    .cwiseMin(kLogStdMax)
                    .replicate(1, obs.cols());
    h.clamp_mask = ((global_log_std_.array() > kLogStdMin) &&
                    (global_log_std_.array() < kLogStdMax))
                       .cast<double>()
                       .matrix()
                       .replicate(1, obs.cols());
  }
  return h;
}

Vec PolicyModel::backward(const Mat& obs, const Mat& dmean,
                          const Mat& dlog_std) const {
  const Mat masked = dlog_std.cwiseProduct(heads(obs).clamp_mask);
  Mat upstream;
  if (mode_ == LogStdMode::StateDependent) {
    upstream.resize(2 * action_dim_, obs.cols());
    upstream.topRows(action_dim_) = dmean;
    upstream.bottomRows(action_dim_) = masked;
  } else {
    upstream = dmean;
  }
  const Vec trunk_grad = trunk_.backward(obs, upstream).flat();
  if (mode_ == LogStdMode::StateDependent) return trunk_grad;
  Vec grad(param_count());
  grad.head(trunk_grad.size()) = trunk_grad;
  grad.tail(action_dim_) = masked.rowwise().sum();
  return grad;
}

long PolicyModel::param_count() const {
  return trunk_.param_count() +
         (mode_ == LogStdMode::Global ? action_dim_ : 0);
}

Vec PolicyModel::params_flat() const {
  if (mode_ == LogStdMode::StateDependent) return trunk_.params_flat();
  Vec out(param_count());
  out.head(trunk_.param_count()) = trunk_.params_flat();
  out.tail(action_dim_) = global_log_std_;
  return out;
}

void PolicyModel::set_params_flat(const Vec& flat) {
  require(flat.size() == param_count(), "policy set_params_flat: size mismatch");
  if (mode_ == LogStdMode::StateDependent) {
    trunk_.set_params_flat(flat);
    return;
  }
  trunk_.set_params_flat(flat.head(trunk_.param_count()));
  global_log_std_ = flat.tail(action_dim_);
}

// ---------------------------------------------------------------------------
// SacLagrangian

SacLagrangian::SacLagrangian(AgentConfig config, TaskSpec task, int obs_dim,
                             int action_dim, std::uint64_t seed)
    : config_(std::move(config)),
      task_(std::move(task)),
      act_rng_(derive_seed(seed, "sac-act")),
      update_rng_(derive_seed(seed, "sac-update")) {
  config_.validate();
  task_.validate();
  Rng init_rng(derive_seed(seed, "sac-init"));
  policy_ = PolicyModel(obs_dim, action_dim, config_.hidden,
                        config_.log_std_mode, init_rng);
  policy_adam_ = AdamState(policy_.param_count());

  std::vector<int> critic_sizes;
  critic_sizes.push_back(obs_dim + action_dim);
  for (int h : config_.hidden) critic_sizes.push_back(h);
  critic_sizes.push_back(1);

  critics_.resize(task_.num_heads());
  for (auto& head : critics_) {
    for (int j = 0; j < 2; ++j) {
      head.online[j] = DenseNet(critic_sizes, Activation::Relu);
      head.online[j].init_params(init_rng);
      head.target[j] = head.online[j];
      head.adam[j] = AdamState(head.online[j].param_count());
    }
  }
}

double SacLagrangian::head_discount(int head) const {
  if (head == 0) return task_.gamma;
  return task_.indicator_spec(head - 1).critic_discount;
}

Vec SacLagrangian::act(const Vec& obs, ActMode mode, Rng& rng) const {
  const int d = policy_.action_dim();
  switch (mode) {
    case ActMode::Random:
      return rng.uniform_vec(d, -1.0, 1.0);
    case ActMode::Explore: {
      const GaussianHead h = policy_.head(obs);
      return sample_squashed(h, rng.normal_vec(d)).action;
    }
    case ActMode::Greedy:
      return greedy_action(policy_.head(obs));
  }
  return Vec::Zero(d);
}

Vec SacLagrangian::q_regression_targets(const Vec& head_rewards,
                                        const std::vector<std::uint8_t>& done,
                                        double gamma_k, double alpha,
                                        const Vec& logp_next,
                                        const Vec& min_target_q) {
  const Eigen::Index n = head_rewards.size();
  Vec target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = -alpha * logp_next[i] + min_target_q[i];
    target[i] = head_rewards[i] + (done[i] ? 0.0 : gamma_k * y);
  }
  return target;
}

namespace {

struct BatchViews {
  Mat obs, actions, next_obs, indicators;
  Vec rewards;
  std::vector<std::uint8_t> done;
};

BatchViews gather(const std::vector<const TransitionRecord*>& batch) {
  require(!batch.empty(), "empty batch");
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  BatchViews v;
  v.obs.resize(batch[0]->observation.size(), n);
  v.actions.resize(batch[0]->action.size(), n);
  v.next_obs.resize(batch[0]->next_observation.size(), n);
  v.indicators.resize(batch[0]->indicators.size(), n);
  v.rewards.resize(n);
  v.done.resize(batch.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const TransitionRecord& r = *batch[i];
    v.obs.col(i) = r.observation;
    v.actions.col(i) = r.action;
    v.next_obs.col(i) = r.next_observation;
    v.indicators.col(i) = r.indicators;
    v.rewards[i] = r.reward;
    v.done[i] = r.done ? 1 : 0;
  }
  return v;
}

// Squash a batch of reparameterised draws; returns actions and log-probs.
void squash_batch(const PolicyModel::BatchHeads& h, const Mat& noise,
                  Mat* actions, Vec* logp) {
  const Eigen::Index d = h.mean.rows(), n = h.mean.cols();
  actions->resize(d, n);
  logp->resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double lp = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double sigma = std::exp(h.log_std(j, i));
      const double u = h.mean(j, i) + sigma * noise(j, i);
      const double a = std::tanh(u);
      (*actions)(j, i) = a;
      lp += -h.log_std(j, i) - kHalfLog2Pi - 0.5 * noise(j, i) * noise(j, i);
      lp -= std::log(1.0 - a * a + kSquashEps);
    }
    (*logp)[i] = lp;
  }
}

Mat stack(const Mat& top, const Mat& bottom) {
  Mat out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

}  // namespace

Vec SacLagrangian::compute_q_targets(
    const std::vector<const TransitionRecord*>& batch, int head,
    Rng& rng) const {
  require(head >= 0 && head < num_heads(), "head index out of range");
  const BatchViews v = gather(batch);
  const Eigen::Index n = v.rewards.size();
  const PolicyModel::BatchHeads h2 = policy_.heads(v.next_obs);
  const Mat noise = rng.normal_mat(policy_.action_dim(), static_cast<int>(n));
  Mat next_actions;
  Vec logp_next;
  squash_batch(h2, noise, &next_actions, &logp_next);
  const Mat sa = stack(v.next_obs, next_actions);
  const Vec q1 = critics_[head].target[0].forward(sa).row(0);
  const Vec q2 = critics_[head].target[1].forward(sa).row(0);
  const Vec min_q = q1.cwiseMin(q2);
  const Vec head_rewards =
      head == 0 ? v.rewards : Vec(v.indicators.row(head - 1));
  return q_regression_targets(head_rewards, v.done, head_discount(head),
                              config_.alpha, logp_next, min_q);
}

AgentUpdateInfo SacLagrangian::update_agent(
    const std::vector<const TransitionRecord*>& batch,
    const MultiplierBank& bank) {
  const BatchViews v = gather(batch);
  const Eigen::Index n = v.rewards.size();
  const int d = policy_.action_dim();
  const AdamConfig adam_cfg{config_.lr};

  // Next actions are sampled once and shared across heads.
  const PolicyModel::BatchHeads h2 = policy_.heads(v.next_obs);
  const Mat noise_next = update_rng_.normal_mat(d, static_cast<int>(n));
  Mat next_actions;
  Vec logp_next;
  squash_batch(h2, noise_next, &next_actions, &logp_next);

  const Mat sa_next = stack(v.next_obs, next_actions);
  const Mat sa = stack(v.obs, v.actions);

  AgentUpdateInfo info;
  info.critic_losses = Vec::Zero(num_heads());
  for (int k = 0; k < num_heads(); ++k) {
    TwinCritic& head = critics_[k];
    const Vec tq1 = head.target[0].forward(sa_next).row(0);
    const Vec tq2 = head.target[1].forward(sa_next).row(0);
    const Vec min_tq = tq1.cwiseMin(tq2);
    const Vec head_rewards =
        k == 0 ? v.rewards : Vec(v.indicators.row(k - 1));
    const Vec target = q_regression_targets(head_rewards, v.done,
                                            head_discount(k), config_.alpha,
                                            logp_next, min_tq);
    for (int j = 0; j < 2; ++j) {
      const Vec pred = head.online[j].forward(sa).row(0);
      const Vec diff = pred - target;
      const double loss = diff.squaredNorm() / static_cast<double>(n);
      if (!std::isfinite(loss)) {
        std::ostringstream os;
        os << "critic loss non-finite (head " << k << ", twin " << j << ")";
        throw DivergenceError(os.str());
      }
      info.critic_losses[k] += 0.5 * loss;
      const Mat upstream = (2.0 / static_cast<double>(n)) * diff.transpose();
      const Vec grad = head.online[j].backward(sa, upstream).flat();
      Vec params = head.online[j].params_flat();
      adam_step(params, grad, head.adam[j], adam_cfg);
      head.online[j].set_params_flat(params);
    }
    for (int j = 0; j < 2; ++j)
      soft_update(head.target[j], head.online[j], config_.tau);
  }

  // Policy ascent with re-sampled actions; lambda values are constants here.
  const Vec weights = head_weights(bank);
  const Mat noise_cur = update_rng_.normal_mat(d, static_cast<int>(n));
  const PolicyEval pe = policy_objective(v.obs, noise_cur, weights);
  if (!std::isfinite(pe.objective))
    throw DivergenceError("policy objective non-finite");
  Vec params = policy_.params_flat();
  const Vec descent_grad = -pe.grad;
  adam_step(params, descent_grad, policy_adam_, adam_cfg);
  policy_.set_params_flat(params);
  info.policy_loss = -pe.objective;
  return info;
}

Vec SacLagrangian::head_weights(const MultiplierBank& bank) const {
  const Vec lam = bank.lambdas();
  require(lam.size() == task_.num_indicators() + 1,
          "bank arity does not match task");
  Vec w(num_heads());
  const double lambda_success =
      task_.has_success() ? lam[1 + task_.success_index()] : 0.0;
  w[0] = MultiplierBank::bootstrap_weight(
      lam[0], lambda_success, task_.use_bootstrap && task_.has_success());
  for (int i = 0; i < task_.num_indicators(); ++i) {
    const bool is_success =
        task_.has_success() && i == task_.success_index();
    w[i + 1] = is_success ? lam[i + 1] : -lam[i + 1];
  }
  return w;
}

SacLagrangian::PolicyEval SacLagrangian::policy_objective(
    const Mat& obs, const Mat& noise, const Vec& weights) const {
  require(weights.size() == num_heads(), "weights arity mismatch");
  const Eigen::Index n = obs.cols();
  const int d = policy_.action_dim();
  const double inv_n = 1.0 / static_cast<double>(n);

  const PolicyModel::BatchHeads h = policy_.heads(obs);
  Mat actions;
  Vec logp;
  squash_batch(h, noise, &actions, &logp);
  const Mat sa = stack(obs, actions);

  double objective = -config_.alpha * logp.mean();

  // Accumulate sum_h w_h dminQ_h/da, selecting the argmin twin per sample.
  Mat dq_da = Mat::Zero(d, n);
  for (int k = 0; k < num_heads(); ++k) {
    const TwinCritic& head = critics_[k];
    const Vec q0 = head.online[0].forward(sa).row(0);
    const Vec q1 = head.online[1].forward(sa).row(0);
    const Vec qmin = q0.cwiseMin(q1);
    objective += weights[k] * inv_n * qmin.sum();
    Mat upstream0 = Mat::Zero(1, n), upstream1 = Mat::Zero(1, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (q0[i] <= q1[i])
        upstream0(0, i) = weights[k] * inv_n;
      else
        upstream1(0, i) = weights[k] * inv_n;
    }
    Mat in_grad0, in_grad1;
    head.online[0].backward(sa, upstream0, &in_grad0);
    head.online[1].backward(sa, upstream1, &in_grad1);
    dq_da += in_grad0.bottomRows(d) + in_grad1.bottomRows(d);
  }

  // Chain through the squashing into head outputs.
  Mat dmean(d, n), dlogstd(d, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      const double sigma = std::exp(h.log_std(j, i));
      const double t = actions(j, i);
      const double one_mt2 = 1.0 - t * t;
      const double dcorr_du = 2.0 * t * one_mt2 / (one_mt2 + kSquashEps);
      const double dlogp_dmean = dcorr_du;
      const double dlogp_dlogstd = -1.0 + dcorr_du * sigma * noise(j, i);
      const double dq_du = dq_da(j, i) * one_mt2;
      dmean(j, i) = -config_.alpha * inv_n * dlogp_dmean + dq_du;
      dlogstd(j, i) = -config_.alpha * inv_n * dlogp_dlogstd +
                      dq_du * sigma * noise(j, i);
    }
  }

  PolicyEval out;
  out.objective = objective;
  out.grad = policy_.backward(obs, dmean, dlogstd);
  return out;
}

MultiplierUpdateInfo SacLagrangian::update_multipliers(
    const ReplayBuffer& buffer, MultiplierBank& bank) {
  const auto batch = buffer.sample_last(config_.batch_lambda);
  Mat indicators(task_.num_indicators(), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i)
    indicators.col(static_cast<Eigen::Index>(i)) = batch[i]->indicators;
  MultiplierUpdateInfo info;
  info.rates = estimate_cost_rates(indicators);
  // The success constraint bounds a per-episode frequency, not a per-step
  // one: its rate is the fraction of episodes ending in the window whose
  // terminal transition carries the success indicator.
  if (task_.has_success()) {
    const int s = task_.success_index();
    long episodes = 0;
    double successes = 0.0;
    for (const TransitionRecord* rec : batch) {
      if (!rec->episode_end) continue;
      episodes += 1;
      successes += rec->indicators[s];
    }
    if (episodes > 0) info.rates[s] = successes / static_cast<double>(episodes);
  }
  bank.update(info.rates, task_);
  info.lambdas_after = bank.lambdas();
  info.base_params_after = bank.base_params();
  info.simplex_error = std::abs(info.lambdas_after.sum() - 1.0);
  return info;
}

void SacLagrangian::maybe_reset(Env& env) {
  if (!need_reset_) return;
  current_obs_ = env.reset();
  need_reset_ = false;
  episode_return_ = 0.0;
  episode_length_ = 0;
  episode_success_ = false;
}

StepMetrics SacLagrangian::train_step(Env& env, ReplayBuffer& buffer,
                                      MultiplierBank& bank) {
  if (!binding_ready_) {
    binding_ = IndicatorBinding(task_, env.event_names());
    binding_ready_ = true;
  }
  maybe_reset(env);

  StepMetrics metrics;
  const ActMode mode = mode_for_step(step_count_);
  const Vec action = act(current_obs_, mode, act_rng_);
  const StepOutcome outcome = env.step(action);
  const double stored_reward =
      reward_hook ? reward_hook(outcome.reward, outcome.indicators)
                  : outcome.reward;

  TransitionRecord rec;
  rec.observation = current_obs_;
  rec.action = action;
  rec.reward = stored_reward;
  rec.next_observation = outcome.next_observation;
  rec.indicators = binding_.select(outcome.indicators);
  rec.done = outcome.done && !outcome.truncated;
  rec.episode_end = outcome.done;
  buffer.push(std::move(rec));

  episode_return_ += outcome.reward;
  episode_length_ += 1;
  if (outcome.done && !outcome.truncated) episode_success_ = true;

  if (outcome.done) {
    metrics.episode_ended = true;
    metrics.episode_return = episode_return_;
    metrics.episode_success = episode_success_;
    metrics.episode_length = episode_length_;
    need_reset_ = true;
  } else {
    current_obs_ = outcome.next_observation;
  }

  step_count_ += 1;
  const long warm_count =
      std::max<long>(config_.batch_theta, config_.batch_lambda);
  const bool ready =
      buffer.size() >= warm_count && step_count_ >= config_.warmup_steps;
  if (ready && step_count_ % config_.period_theta == 0) {
    const auto batch = buffer.sample_uniform(config_.batch_theta, update_rng_);
    metrics.agent = update_agent(batch, bank);
    metrics.updated_agent = true;
  }
  if (ready && step_count_ % config_.period_lambda == 0 &&
      !freeze_multipliers && task_.num_indicators() > 0) {
    metrics.multipliers = update_multipliers(buffer, bank);
    metrics.updated_multipliers = true;
  }
  return metrics;
}

}  // namespace crl
