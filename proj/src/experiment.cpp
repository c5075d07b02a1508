#include "crl/experiment.hpp"

#include "crl/baseline.hpp"
#include "crl/checkpoint.hpp"
#include "crl/svg.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

namespace crl {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config

long SweepSection::num_cells() const {
  long n = 1;
  for (const auto& v : weight_values) n *= static_cast<long>(v.size());
  return n;
}

std::vector<double> SweepSection::cell_weights(long cell) const {
  std::vector<double> w(weight_values.size());
  long rem = cell;
  for (long i = static_cast<long>(weight_values.size()) - 1; i >= 0; --i) {
    const long n = static_cast<long>(weight_values[i].size());
    w[i] = weight_values[i][rem % n];
    rem /= n;
  }
  return w;
}

void SweepSection::validate() const {
  require(!constraint_names.empty(), "sweep needs at least one constraint");
  require(constraint_names.size() == weight_values.size(),
          "sweep weight lists must match constraint names");
  for (const auto& v : weight_values) {
    require(!v.empty(), "empty sweep weight list");
    for (double w : v) require(w >= 0.0, "penalty weights must be >= 0");
  }
  require(cell_steps >= 1, "sweep cell_steps must be >= 1");
  require(eval_episodes >= 1, "sweep eval_episodes must be >= 1");
  require(!seeds.empty(), "sweep needs at least one seed");
}

TaskSpec ExperimentConfig::task() const {
  TaskSpec t;
  t.behavioral = behavioral;
  t.success = success;
  t.gamma = agent.gamma;
  t.use_bootstrap = use_bootstrap && success.has_value();
  return t;
}

std::unique_ptr<Env> ExperimentConfig::make_env(std::uint64_t env_seed) const {
  if (diagnostic)
    return std::make_unique<DiagnosticArena>(env, *diagnostic, env_seed);
  return std::make_unique<MiniArena>(env, env_seed);
}

void ExperimentConfig::validate() const {
  require(total_steps >= 1, "total_steps must be >= 1");
  require(eval_period >= 1, "eval_period must be >= 1");
  require(eval_episodes >= 1, "eval_episodes must be >= 1");
  env.validate();
  if (diagnostic) diagnostic->validate();
  agent.validate();
  task().validate();
  if (sweep) sweep->validate();
}

namespace {

BoundKind parse_kind(const std::string& s) {
  if (s == "upper_bound" || s == "upper") return BoundKind::UpperBound;
  if (s == "lower_bound" || s == "lower") return BoundKind::LowerBound;
  throw ConfigError("unknown constraint kind: " + s);
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    read_if(j, "name", cfg.name);
    read_if(j, "seed", cfg.seed);
    read_if(j, "seeds", cfg.seeds);
    read_if(j, "total_steps", cfg.total_steps);
    read_if(j, "eval_period", cfg.eval_period);
    read_if(j, "eval_episodes", cfg.eval_episodes);
    read_if(j, "out_dir", cfg.out_dir);
    read_if(j, "use_bootstrap", cfg.use_bootstrap);
    read_if(j, "freeze_multipliers", cfg.freeze_multipliers);
    if (j.contains("multiplier_mode")) {
      const std::string m = j.at("multiplier_mode").get<std::string>();
      if (m == "normalized")
        cfg.multiplier_mode = MultiplierMode::Normalized;
      else if (m == "unnormalized")
        cfg.multiplier_mode = MultiplierMode::UnnormalizedAblation;
      else
        throw ConfigError("unknown multiplier_mode: " + m);
    }
    if (j.contains("env")) {
      const json& e = j.at("env");
      ArenaConfig& a = cfg.env;
      read_if(e, "episode_length", a.episode_length);
      read_if(e, "goal_radius", a.goal_radius);
      read_if(e, "marker_x", a.marker_x);
      read_if(e, "marker_y", a.marker_y);
      read_if(e, "fov_half_angle", a.fov_half_angle);
      read_if(e, "speed_limit", a.speed_limit);
      read_if(e, "energy_drain", a.energy_drain);
      read_if(e, "recharge_rate", a.recharge_rate);
      read_if(e, "min_energy", a.min_energy);
      read_if(e, "shaping_coef", a.shaping_coef);
      read_if(e, "accel", a.accel);
      read_if(e, "drag", a.drag);
      read_if(e, "turn_rate", a.turn_rate);
      read_if(e, "min_spawn_goal_dist", a.min_spawn_goal_dist);
      read_if(e, "spawn_lava_margin", a.spawn_lava_margin);
      read_if(e, "probe_spacing", a.probe_spacing);
      if (e.contains("lava")) {
        a.lava.clear();
        for (const auto& r : e.at("lava")) {
          require(r.is_array() && r.size() == 4, "lava rect needs [x0,y0,x1,y1]");
          a.lava.push_back({r[0].get<double>(), r[1].get<double>(),
                            r[2].get<double>(), r[3].get<double>()});
        }
      }
    }
    if (j.contains("diagnostic")) {
      DiagnosticConfig d;
      read_if(j.at("diagnostic"), "phase_switch_step", d.phase_switch_step);
      cfg.diagnostic = d;
    }
    if (j.contains("agent")) {
      const json& a = j.at("agent");
      AgentConfig& g = cfg.agent;
      read_if(a, "gamma", g.gamma);
      read_if(a, "alpha", g.alpha);
      read_if(a, "tau", g.tau);
      read_if(a, "lr", g.lr);
      read_if(a, "multiplier_lr", g.multiplier_lr);
      read_if(a, "batch_theta", g.batch_theta);
      read_if(a, "batch_lambda", g.batch_lambda);
      read_if(a, "period_theta", g.period_theta);
      read_if(a, "period_lambda", g.period_lambda);
      read_if(a, "random_steps", g.random_steps);
      read_if(a, "warmup_steps", g.warmup_steps);
      read_if(a, "hidden", g.hidden);
      read_if(a, "buffer_capacity", g.buffer_capacity);
      read_if(a, "z_init", g.z_init);
      if (a.contains("log_std_mode")) {
        const std::string m = a.at("log_std_mode").get<std::string>();
        if (m == "state")
          g.log_std_mode = LogStdMode::StateDependent;
        else if (m == "global")
          g.log_std_mode = LogStdMode::Global;
        else
          throw ConfigError("unknown log_std_mode: " + m);
      }
    }
    if (j.contains("constraints")) {
      for (const auto& c : j.at("constraints")) {
        ConstraintSpec spec;
        spec.name = c.at("name").get<std::string>();
        spec.kind = c.contains("kind")
                        ? parse_kind(c.at("kind").get<std::string>())
                        : BoundKind::UpperBound;
        spec.threshold = c.at("threshold").get<double>();
        spec.critic_discount = cfg.agent.gamma;
        read_if(c, "critic_discount", spec.critic_discount);
        cfg.behavioral.push_back(std::move(spec));
      }
    }
    if (j.contains("success_constraint") &&
        !j.at("success_constraint").is_null()) {
      const json& s = j.at("success_constraint");
      ConstraintSpec spec;
      spec.name = "reached_goal";
      read_if(s, "name", spec.name);
      spec.kind = BoundKind::LowerBound;
      spec.threshold = s.at("threshold").get<double>();
      spec.critic_discount = cfg.agent.gamma;
      read_if(s, "critic_discount", spec.critic_discount);
      cfg.success = std::move(spec);
    }
    if (j.contains("sweep")) {
      const json& s = j.at("sweep");
      SweepSection sw;
      sw.constraint_names = s.at("constraints").get<std::vector<std::string>>();
      sw.weight_values =
          s.at("weights").get<std::vector<std::vector<double>>>();
      read_if(s, "cell_steps", sw.cell_steps);
      read_if(s, "eval_episodes", sw.eval_episodes);
      read_if(s, "seeds", sw.seeds);
      cfg.sweep = std::move(sw);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string ExperimentConfig::to_json_text() const {
  json j;
  j["name"] = name;
  j["seed"] = seed;
  if (!seeds.empty()) j["seeds"] = seeds;
  j["total_steps"] = total_steps;
  j["eval_period"] = eval_period;
  j["eval_episodes"] = eval_episodes;
  j["out_dir"] = out_dir;
  j["multiplier_mode"] = multiplier_mode == MultiplierMode::Normalized
                             ? "normalized"
                             : "unnormalized";
  j["use_bootstrap"] = use_bootstrap;
  j["freeze_multipliers"] = freeze_multipliers;
  json e;
  e["episode_length"] = env.episode_length;
  e["goal_radius"] = env.goal_radius;
  e["marker_x"] = env.marker_x;
  e["marker_y"] = env.marker_y;
  e["fov_half_angle"] = env.fov_half_angle;
  e["speed_limit"] = env.speed_limit;
  e["energy_drain"] = env.energy_drain;
  e["recharge_rate"] = env.recharge_rate;
  e["min_energy"] = env.min_energy;
  e["shaping_coef"] = env.shaping_coef;
  e["accel"] = env.accel;
  e["drag"] = env.drag;
  e["turn_rate"] = env.turn_rate;
  e["min_spawn_goal_dist"] = env.min_spawn_goal_dist;
  e["spawn_lava_margin"] = env.spawn_lava_margin;
  e["probe_spacing"] = env.probe_spacing;
  json lava = json::array();
  for (const auto& r : env.lava) lava.push_back({r.x0, r.y0, r.x1, r.y1});
  e["lava"] = lava;
  j["env"] = e;
  if (diagnostic)
    j["diagnostic"] = {{"phase_switch_step", diagnostic->phase_switch_step}};
  json a;
  a["gamma"] = agent.gamma;
  a["alpha"] = agent.alpha;
  a["tau"] = agent.tau;
  a["lr"] = agent.lr;
  a["multiplier_lr"] = agent.multiplier_lr;
  a["batch_theta"] = agent.batch_theta;
  a["batch_lambda"] = agent.batch_lambda;
  a["period_theta"] = agent.period_theta;
  a["period_lambda"] = agent.period_lambda;
  a["random_steps"] = agent.random_steps;
  a["warmup_steps"] = agent.warmup_steps;
  a["hidden"] = agent.hidden;
  a["buffer_capacity"] = agent.buffer_capacity;
  a["z_init"] = agent.z_init;
  a["log_std_mode"] =
      agent.log_std_mode == LogStdMode::StateDependent ? "state" : "global";
  j["agent"] = a;
  json cs = json::array();
  for (const auto& c : behavioral) {
    cs.push_back({{"name", c.name},
                  {"kind", c.kind == BoundKind::UpperBound ? "upper_bound"
                                                           : "lower_bound"},
                  {"threshold", c.threshold},
                  {"critic_discount", c.critic_discount}});
  }
  j["constraints"] = cs;
  if (success) {
    j["success_constraint"] = {{"name", success->name},
                               {"threshold", success->threshold},
                               {"critic_discount", success->critic_discount}};
  }
  if (sweep) {
    j["sweep"] = {{"constraints", sweep->constraint_names},
                  {"weights", sweep->weight_values},
                  {"cell_steps", sweep->cell_steps},
                  {"eval_episodes", sweep->eval_episodes},
                  {"seeds", sweep->seeds}};
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Evaluation

EvalReport evaluate_actions(const std::function<Vec(const Vec&)>& act_fn,
                            Env& env, const TaskSpec& task, int n_episodes,
                            const std::string& trajectory_csv) {
  require(n_episodes >= 1, "need at least one evaluation episode");
  const IndicatorBinding binding(task, env.event_names());

  std::unique_ptr<CsvWriter> traj;
  if (!trajectory_csv.empty()) {
    std::vector<std::string> cols = {"episode", "t"};
    for (const auto& f : env.observation_spec())
      for (int i = 0; i < f.size; ++i)
        cols.push_back("obs_" + f.name + (f.size > 1 ? "_" + std::to_string(i)
                                                     : std::string()));
    for (const auto& f : env.action_spec()) cols.push_back("act_" + f.name);
    cols.push_back("reward");
    for (const auto& n : env.event_names()) cols.push_back("event_" + n);
    cols.push_back("done");
    traj = std::make_unique<CsvWriter>(trajectory_csv, cols);
  }

  double return_sum = 0.0;
  long successes = 0;
  Vec rate_sums = Vec::Zero(task.num_indicators());
  long total_steps = 0;
  for (int ep = 0; ep < n_episodes; ++ep) {
    Vec obs = env.reset();
    double ep_return = 0.0;
    bool done = false;
    long t = 0;
    while (!done) {
      const Vec action = act_fn(obs);
      const StepOutcome out = env.step(action);
      ep_return += out.reward;
      rate_sums += binding.select(out.indicators);
      total_steps += 1;
      t += 1;
      if (traj) {
        std::vector<double> row;
        row.push_back(ep);
        row.push_back(static_cast<double>(t));
        for (Eigen::Index i = 0; i < obs.size(); ++i) row.push_back(obs[i]);
        for (Eigen::Index i = 0; i < action.size(); ++i)
          row.push_back(action[i]);
        row.push_back(out.reward);
        for (Eigen::Index i = 0; i < out.indicators.size(); ++i)
          row.push_back(out.indicators[i]);
        row.push_back(out.done ? 1.0 : 0.0);
        traj->write_row(row);
      }
      if (out.done) {
        if (!out.truncated) successes += 1;
        done = true;
      } else {
        obs = out.next_observation;
      }
    }
    return_sum += ep_return;
  }

  EvalReport report;
  report.mean_return = return_sum / n_episodes;
  report.success_rate = static_cast<double>(successes) / n_episodes;
  report.rates = total_steps > 0 ? Vec(rate_sums / total_steps)
                                 : Vec(Vec::Zero(task.num_indicators()));
  // The success constraint is a per-episode frequency.
  if (task.has_success()) report.rates[task.success_index()] = report.success_rate;
  return report;
}

EvalReport evaluate_policy(const PolicyModel& policy,
                           const ExperimentConfig& cfg, int n_episodes,
                           std::uint64_t seed,
                           const std::string& trajectory_csv) {
  auto env = cfg.make_env(derive_seed(seed, "eval-env"));
  require(env->observation_dim() == policy.obs_dim() &&
              env->action_dim() == policy.action_dim(),
          "checkpoint does not match environment dimensions");
  auto act_fn = [&policy](const Vec& obs) {
    return greedy_action(policy.head(obs));
  };
  return evaluate_actions(act_fn, *env, cfg.task(), n_episodes,
                          trajectory_csv);
}

EvalReport evaluate_checkpoint(const std::string& checkpoint_path,
                               const ExperimentConfig& cfg, int n_episodes,
                               std::uint64_t seed,
                               const std::string& trajectory_csv) {
  auto env = cfg.make_env(0);
  Rng init(0);
  PolicyModel policy(env->observation_dim(), env->action_dim(),
                     cfg.agent.hidden, cfg.agent.log_std_mode, init);
  load_policy_file(checkpoint_path, policy);
  return evaluate_policy(policy, cfg, n_episodes, seed, trajectory_csv);
}

// ---------------------------------------------------------------------------
// Training

namespace {

std::vector<std::string> metric_columns(const TaskSpec& task) {
  std::vector<std::string> cols = {"step", "return", "success_rate"};
  for (int i = 0; i < task.num_indicators(); ++i)
    cols.push_back("rate_" + task.indicator_spec(i).name);
  cols.push_back("lambda_0");
  for (int i = 0; i < task.num_indicators(); ++i)
    cols.push_back("lambda_" + task.indicator_spec(i).name);
  for (int k = 0; k < task.num_heads(); ++k)
    cols.push_back("loss_q" + std::to_string(k));
  cols.push_back("loss_policy");
  return cols;
}

std::vector<std::string> multiplier_columns(const TaskSpec& task) {
  std::vector<std::string> cols = {"step", "lambda_0"};
  for (int i = 0; i < task.num_indicators(); ++i)
    cols.push_back("lambda_" + task.indicator_spec(i).name);
  for (int i = 0; i < task.num_indicators(); ++i)
    cols.push_back("z_" + task.indicator_spec(i).name);
  for (int i = 0; i < task.num_indicators(); ++i)
    cols.push_back("rate_" + task.indicator_spec(i).name);
  cols.push_back("simplex_error");
  return cols;
}

}  // namespace

RunResult run_training(const ExperimentConfig& cfg, std::uint64_t seed,
                       const std::string& run_dir) {
  cfg.validate();
  fs::create_directories(run_dir);
  {
    std::ofstream cfg_out(run_dir + "/config.json");
    require(cfg_out.good(), "cannot write config echo");
    cfg_out << cfg.to_json_text() << "\n";
  }

  const TaskSpec task = cfg.task();
  auto env = cfg.make_env(derive_seed(seed, "train-env"));
  SacLagrangian agent(cfg.agent, task, env->observation_dim(),
                      env->action_dim(), seed);
  agent.freeze_multipliers = cfg.freeze_multipliers;
  MultiplierBank bank(cfg.multiplier_mode, task.num_indicators(),
                      cfg.agent.z_init, multiplier_adam(cfg.agent.multiplier_lr));
  ReplayBuffer buffer(cfg.agent.buffer_capacity, env->observation_dim(),
                      env->action_dim(), task.num_indicators());

  CsvWriter metrics(run_dir + "/metrics.csv", metric_columns(task));
  CsvWriter mult_csv(run_dir + "/multipliers.csv", multiplier_columns(task));

  RunResult result;
  result.run_dir = run_dir;
  result.log.constraint_names.clear();
  for (int i = 0; i < task.num_indicators(); ++i)
    result.log.constraint_names.push_back(task.indicator_spec(i).name);

  Vec last_critic_losses =
      Vec::Constant(task.num_heads(), std::numeric_limits<double>::quiet_NaN());
  double last_policy_loss = std::numeric_limits<double>::quiet_NaN();
  std::deque<std::vector<double>> postmortem;

  auto write_eval = [&](long step) {
    EvalReport rep =
        evaluate_policy(agent.policy(), cfg, cfg.eval_episodes,
                        derive_seed(seed, "eval", static_cast<std::uint64_t>(step)));
    rep.step = step;
    rep.lambdas = bank.lambdas();
    rep.critic_losses = last_critic_losses;
    rep.policy_loss = last_policy_loss;
    std::vector<double> row = {static_cast<double>(step), rep.mean_return,
                               rep.success_rate};
    for (Eigen::Index i = 0; i < rep.rates.size(); ++i)
      row.push_back(rep.rates[i]);
    for (Eigen::Index i = 0; i < rep.lambdas.size(); ++i)
      row.push_back(rep.lambdas[i]);
    for (Eigen::Index i = 0; i < rep.critic_losses.size(); ++i)
      row.push_back(rep.critic_losses[i]);
    row.push_back(rep.policy_loss);
    metrics.write_row(row);
    result.log.evals.push_back(rep);
    return rep;
  };

  try {
    for (long step = 1; step <= cfg.total_steps; ++step) {
      const StepMetrics m = agent.train_step(*env, buffer, bank);
      if (m.updated_agent) {
        last_critic_losses = m.agent.critic_losses;
        last_policy_loss = m.agent.policy_loss;
        std::vector<double> row = {static_cast<double>(step)};
        for (Eigen::Index i = 0; i < m.agent.critic_losses.size(); ++i)
          row.push_back(m.agent.critic_losses[i]);
        row.push_back(m.agent.policy_loss);
        postmortem.push_back(std::move(row));
        if (postmortem.size() > 100) postmortem.pop_front();
      }
      if (m.updated_multipliers) {
        const auto& mu = m.multipliers;
        std::vector<double> row = {static_cast<double>(step)};
        for (Eigen::Index i = 0; i < mu.lambdas_after.size(); ++i)
          row.push_back(mu.lambdas_after[i]);
        for (Eigen::Index i = 0; i < mu.base_params_after.size(); ++i)
          row.push_back(mu.base_params_after[i]);
        for (Eigen::Index i = 0; i < mu.rates.size(); ++i)
          row.push_back(mu.rates[i]);
        row.push_back(mu.simplex_error);
        mult_csv.write_row(row);
        result.log.multiplier_updates += 1;
        result.log.max_simplex_error =
            std::max(result.log.max_simplex_error, mu.simplex_error);
        for (Eigen::Index i = 0; i < mu.lambdas_after.size(); ++i) {
          result.log.max_lambda =
              std::max(result.log.max_lambda, mu.lambdas_after[i]);
          result.log.min_lambda =
              std::min(result.log.min_lambda, mu.lambdas_after[i]);
        }
      }
      if (step % cfg.eval_period == 0 || step == cfg.total_steps) {
        const EvalReport rep = write_eval(step);
        if (step == cfg.total_steps) result.final_report = rep;
      }
    }
    save_agent_file(run_dir + "/checkpoint.bin", agent, bank);
  } catch (const DivergenceError& e) {
    result.aborted = true;
    result.abort_message = e.what();
    std::ofstream note(run_dir + "/abort.txt");
    note << e.what() << "\n";
    CsvWriter pm(run_dir + "/abort_postmortem.csv",
                 [&] {
                   std::vector<std::string> cols = {"step"};
                   for (int k = 0; k < task.num_heads(); ++k)
                     cols.push_back("loss_q" + std::to_string(k));
                   cols.push_back("loss_policy");
                   return cols;
                 }());
    for (const auto& row : postmortem) pm.write_row(row);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Diagnostic

DiagnosticResult run_diagnostic(const ExperimentConfig& cfg,
                                const std::string& out_dir) {
  require(cfg.diagnostic.has_value(),
          "diagnostic run requires a diagnostic section in the config");
  DiagnosticResult result;
  ExperimentConfig norm_cfg = cfg;
  norm_cfg.multiplier_mode = MultiplierMode::Normalized;
  ExperimentConfig unnorm_cfg = cfg;
  unnorm_cfg.multiplier_mode = MultiplierMode::UnnormalizedAblation;
  result.normalized = run_training(norm_cfg, cfg.seed, out_dir + "/normalized");
  result.unnormalized =
      run_training(unnorm_cfg, cfg.seed, out_dir + "/unnormalized");
  return result;
}

// ---------------------------------------------------------------------------
// Plots

namespace {

Series make_series(const CsvTable& t, const std::string& xcol,
                   const std::string& ycol, const std::string& label) {
  Series s;
  s.label = label;
  s.x = t.column(xcol);
  s.y = t.column(ycol);
  return s;
}

}  // namespace

void emit_plots(const std::string& run_dir, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const std::string cfg_path = run_dir + "/config.json";
  std::optional<ExperimentConfig> cfg;
  if (fs::exists(cfg_path)) {
    cfg = ExperimentConfig::from_json_file(cfg_path);
  }

  const std::string metrics_path = run_dir + "/metrics.csv";
  if (fs::exists(metrics_path)) {
    const CsvTable t = read_csv(metrics_path);
    require(t.num_rows() > 0, "metrics.csv has no rows");
    write_line_chart(out_dir + "/return.svg", "evaluation return",
                     {make_series(t, "step", "return", "return")});
    std::vector<Series> rate_series;
    std::vector<ThresholdLine> thresholds;
    rate_series.push_back(
        make_series(t, "step", "success_rate", "success_rate"));
    for (const auto& col : t.columns) {
      if (col.rfind("rate_", 0) == 0)
        rate_series.push_back(make_series(t, "step", col, col));
    }
    if (cfg) {
      const TaskSpec task = cfg->task();
      for (int i = 0; i < task.num_indicators(); ++i) {
        const auto& c = task.indicator_spec(i);
        thresholds.push_back({c.name, c.threshold});
      }
    }
    write_line_chart(out_dir + "/rates.svg", "constraint event rates",
                     rate_series, thresholds);
    std::vector<Series> loss_series;
    for (const auto& col : t.columns) {
      if (col.rfind("loss_", 0) == 0)
        loss_series.push_back(make_series(t, "step", col, col));
    }
    write_line_chart(out_dir + "/losses.svg", "training losses", loss_series);
  }

  const std::string mult_path = run_dir + "/multipliers.csv";
  if (fs::exists(mult_path)) {
    const CsvTable t = read_csv(mult_path);
    if (t.num_rows() > 0) {
      std::vector<Series> lam_series;
      for (const auto& col : t.columns) {
        if (col.rfind("lambda", 0) == 0)
          lam_series.push_back(make_series(t, "step", col, col));
      }
      write_line_chart(out_dir + "/lambdas.svg", "multiplier trace",
                       lam_series);
    }
  }

  const std::string sweep_path = run_dir + "/sweep.csv";
  if (fs::exists(sweep_path)) {
    const CsvTable t = read_csv(sweep_path);
    // Recover the grid axes from the weight columns.
    std::vector<std::string> names;
    std::vector<std::vector<double>> axes;
    for (const auto& col : t.columns) {
      if (col.rfind("w_", 0) != 0) continue;
      names.push_back(col.substr(2));
      std::vector<double> values;
      for (double v : t.column(col))
        if (std::find(values.begin(), values.end(), v) == values.end())
          values.push_back(v);
      axes.push_back(std::move(values));
    }
    if (!axes.empty()) {
      SweepReport report;
      report.constraint_names = names;
      report.weight_values = axes;
      for (const auto& row : t.rows) {
        SweepCellResult cell;
        cell.cell = static_cast<long>(row[t.column_index("cell")]);
        for (const auto& n : names)
          cell.weights.push_back(row[t.column_index("w_" + n)]);
        cell.mean_return = row[t.column_index("return")];
        cell.success_rate = row[t.column_index("success_rate")];
        cell.feasible = row[t.column_index("feasible")] != 0.0;
        cell.good = row[t.column_index("good")] != 0.0;
        report.cells.push_back(std::move(cell));
      }
      write_sweep_plots(report, out_dir);
    }
  }
}

void parallel_for(long n_jobs, int n_workers,
                  const std::function<void(long)>& fn) {
  if (n_jobs <= 0) return;
  n_workers = std::max(1, std::min<int>(n_workers, static_cast<int>(n_jobs)));
  if (n_workers == 1) {
    for (long i = 0; i < n_jobs; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr first_error;
  std::mutex err_mutex;
  std::vector<std::thread> workers;
  workers.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        const long i = next.fetch_add(1);
        if (i >= n_jobs) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace crl
