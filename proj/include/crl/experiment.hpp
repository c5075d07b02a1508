#pragma once

#include "crl/arena.hpp"
#include "crl/cmdp.hpp"
#include "crl/csv.hpp"
#include "crl/multipliers.hpp"
#include "crl/sac.hpp"

#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace crl {

/// Grid axes for the reward-engineering sweep.
struct SweepSection {
  std::vector<std::string> constraint_names;
  std::vector<std::vector<double>> weight_values;  // one list per constraint
  long cell_steps = 50000;
  int eval_episodes = 10;
  std::vector<std::uint64_t> seeds = {1, 2, 3};

  long num_cells() const;
  std::vector<double> cell_weights(long cell) const;
  void validate() const;
};

/// Declarative experiment description; every Arena-table hyperparameter has a
/// named key whose default is the table value.
struct ExperimentConfig {
  std::string name = "run";
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds;  // empty means {seed}
  long total_steps = 200000;
  long eval_period = 5000;
  int eval_episodes = 10;
  std::string out_dir = "runs/out";
  MultiplierMode multiplier_mode = MultiplierMode::Normalized;
  bool use_bootstrap = false;
  bool freeze_multipliers = false;
  ArenaConfig env;
  std::optional<DiagnosticConfig> diagnostic;
  AgentConfig agent;
  std::vector<ConstraintSpec> behavioral;
  std::optional<ConstraintSpec> success;
  std::optional<SweepSection> sweep;

  TaskSpec task() const;
  std::vector<std::uint64_t> seed_list() const {
    return seeds.empty() ? std::vector<std::uint64_t>{seed} : seeds;
  }
  std::unique_ptr<Env> make_env(std::uint64_t env_seed) const;
  void validate() const;

  static ExperimentConfig from_json_file(const std::string& path);
  static ExperimentConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

struct EvalReport {
  long step = 0;
  double mean_return = 0.0;
  double success_rate = 0.0;
  Vec rates;    // task indicator rates over all evaluation steps
  Vec lambdas;  // lambda_0 .. lambda_n at evaluation time
  Vec critic_losses;
  double policy_loss = std::numeric_limits<double>::quiet_NaN();
};

struct MetricLog {
  std::vector<std::string> constraint_names;
  std::vector<EvalReport> evals;
  long multiplier_updates = 0;
  double max_simplex_error = 0.0;
  double max_lambda = 0.0;
  double min_lambda = 1.0;
};

struct RunResult {
  bool aborted = false;
  std::string abort_message;
  MetricLog log;
  EvalReport final_report;
  std::string run_dir;
};

/// Trains for cfg.total_steps with evaluation pauses every eval_period steps,
/// streaming metrics.csv and multipliers.csv into run_dir. Deterministic per
/// (config, seed): reruns produce byte-identical CSVs. Divergence aborts are
/// reported in the result together with an abort_postmortem.csv holding the
/// last 100 update rows.
RunResult run_training(const ExperimentConfig& cfg, std::uint64_t seed,
                       const std::string& run_dir);

/// Greedy-policy evaluation: rates are averaged over all steps of all
/// episodes, return per episode. Optionally dumps per-step trajectories.
EvalReport evaluate_policy(const PolicyModel& policy,
                           const ExperimentConfig& cfg, int n_episodes,
                           std::uint64_t seed,
                           const std::string& trajectory_csv = "");

/// Evaluation of an arbitrary action rule (used by tests and scripted
/// baselines).
EvalReport evaluate_actions(const std::function<Vec(const Vec&)>& act_fn,
                            Env& env, const TaskSpec& task, int n_episodes,
                            const std::string& trajectory_csv = "");

/// Checkpoint-driven evaluation matching the CLI `eval` subcommand.
EvalReport evaluate_checkpoint(const std::string& checkpoint_path,
                               const ExperimentConfig& cfg, int n_episodes,
                               std::uint64_t seed,
                               const std::string& trajectory_csv = "");

struct DiagnosticResult {
  RunResult normalized;
  RunResult unnormalized;
};

/// Runs both multiplier modes on the two-phase diagnostic environment with
/// identical seeds. An unnormalized divergence abort is an outcome, not a
/// failure.
DiagnosticResult run_diagnostic(const ExperimentConfig& cfg,
                                const std::string& out_dir);

/// Renders SVG charts (return, rates with threshold lines, multiplier traces,
/// losses, sweep heat grids) from the CSVs in run_dir.
void emit_plots(const std::string& run_dir, const std::string& out_dir);

/// Runs fn(0..n_jobs-1) on up to n_workers threads; each job owns its state.
void parallel_for(long n_jobs, int n_workers,
                  const std::function<void(long)>& fn);

}  // namespace crl
