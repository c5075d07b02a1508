#include "crl/baseline.hpp"

#include "crl/svg.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

namespace crl {

namespace fs = std::filesystem;

double penalty_reward(double reward, const Vec& indicators,
                      const PenaltyWeights& weights) {
  require(indicators.size() == static_cast<Eigen::Index>(weights.values.size()),
          "penalty_reward: arity mismatch");
  double out = reward;
  for (Eigen::Index k = 0; k < indicators.size(); ++k)
    out -= weights.values[k] * indicators[k];
  return out;
}

double SweepReport::good_fraction() const {
  if (cells.empty()) return 0.0;
  long good = 0;
  for (const auto& c : cells) good += c.good ? 1 : 0;
  return static_cast<double>(good) / static_cast<double>(cells.size());
}

namespace {

// Task used only for evaluating feasibility of a cell: the sweep constraints
// with their configured thresholds. Training itself is unconstrained.
TaskSpec sweep_eval_task(const ExperimentConfig& cfg) {
  TaskSpec t;
  t.gamma = cfg.agent.gamma;
  for (const auto& name : cfg.sweep->constraint_names) {
    bool found = false;
    for (const auto& c : cfg.behavioral) {
      if (c.name == name) {
        t.behavioral.push_back(c);
        found = true;
        break;
      }
    }
    require(found, "sweep constraint '" + name +
                       "' is not declared in the constraints list");
  }
  return t;
}

struct CellSeedOutcome {
  double mean_return = 0.0;
  double success_rate = 0.0;
  Vec rates;
  bool diverged = false;
};

CellSeedOutcome run_cell(const ExperimentConfig& cfg, const TaskSpec& eval_task,
                         const std::vector<double>& weights,
                         std::uint64_t seed) {
  const SweepSection& sweep = *cfg.sweep;

  // Unconstrained agent on the penalty-scalarized reward.
  TaskSpec train_task;
  train_task.gamma = cfg.agent.gamma;

  auto env = cfg.make_env(derive_seed(seed, "train-env"));
  const IndicatorBinding penalty_binding(eval_task, env->event_names());
  SacLagrangian agent(cfg.agent, train_task, env->observation_dim(),
                      env->action_dim(), seed);
  PenaltyWeights pw{weights};
  agent.reward_hook = [&](double r, const Vec& events) {
    return penalty_reward(r, penalty_binding.select(events), pw);
  };
  MultiplierBank bank(MultiplierMode::Normalized, 0, 0.0,
                      multiplier_adam(cfg.agent.multiplier_lr));
  ReplayBuffer buffer(cfg.agent.buffer_capacity, env->observation_dim(),
                      env->action_dim(), 0);

  CellSeedOutcome out;
  try {
    for (long step = 0; step < sweep.cell_steps; ++step)
      agent.train_step(*env, buffer, bank);
  } catch (const DivergenceError&) {
    out.diverged = true;
    out.rates = Vec::Constant(eval_task.num_indicators(),
                              std::numeric_limits<double>::quiet_NaN());
    out.mean_return = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  ExperimentConfig eval_cfg = cfg;
  eval_cfg.behavioral = eval_task.behavioral;
  eval_cfg.success.reset();
  eval_cfg.sweep.reset();
  const EvalReport rep = evaluate_policy(
      agent.policy(), eval_cfg, sweep.eval_episodes, derive_seed(seed, "eval"));
  out.mean_return = rep.mean_return;
  out.success_rate = rep.success_rate;
  out.rates = rep.rates;
  return out;
}

}  // namespace

SweepReport run_sweep(const ExperimentConfig& cfg, const std::string& out_dir,
                      int n_workers) {
  require(cfg.sweep.has_value(), "config has no sweep section");
  cfg.validate();
  const SweepSection& sweep = *cfg.sweep;
  const TaskSpec eval_task = sweep_eval_task(cfg);
  fs::create_directories(out_dir);

  SweepReport report;
  report.constraint_names = sweep.constraint_names;
  report.weight_values = sweep.weight_values;
  const long n_cells = sweep.num_cells();
  report.cells.resize(n_cells);

  const long n_seeds = static_cast<long>(sweep.seeds.size());
  std::vector<CellSeedOutcome> outcomes(n_cells * n_seeds);

  parallel_for(n_cells * n_seeds, n_workers, [&](long job) {
    const long cell = job / n_seeds;
    const long seed_idx = job % n_seeds;
    outcomes[job] = run_cell(cfg, eval_task, sweep.cell_weights(cell),
                             sweep.seeds[seed_idx]);
  });

  for (long cell = 0; cell < n_cells; ++cell) {
    SweepCellResult& r = report.cells[cell];
    r.cell = cell;
    r.weights = sweep.cell_weights(cell);
    r.rates = Vec::Zero(eval_task.num_indicators());
    double ret = 0.0, succ = 0.0;
    long valid = 0;
    for (long s = 0; s < n_seeds; ++s) {
      const CellSeedOutcome& o = outcomes[cell * n_seeds + s];
      if (o.diverged) {
        r.diverged = true;
        continue;
      }
      ret += o.mean_return;
      succ += o.success_rate;
      r.rates += o.rates;
      r.per_seed_success.push_back(o.success_rate);
      valid += 1;
    }
    if (valid == 0) {
      r.mean_return = std::numeric_limits<double>::quiet_NaN();
      r.success_rate = 0.0;
      r.rates = Vec::Constant(eval_task.num_indicators(),
                              std::numeric_limits<double>::quiet_NaN());
      r.feasible = false;
      r.good = false;
      continue;
    }
    r.mean_return = ret / valid;
    r.success_rate = succ / valid;
    r.rates /= static_cast<double>(valid);
    r.feasible =
        is_feasible(r.rates, eval_task, kReportFeasibilityTolerance);
    r.good = r.feasible && r.success_rate >= kGoodSuccessRate;
  }

  write_sweep_csv(report, out_dir + "/sweep.csv");
  write_sweep_plots(report, out_dir);
  return report;
}

void write_sweep_csv(const SweepReport& report, const std::string& path) {
  std::vector<std::string> cols = {"cell"};
  for (const auto& n : report.constraint_names) cols.push_back("w_" + n);
  cols.push_back("return");
  cols.push_back("success_rate");
  for (const auto& n : report.constraint_names) cols.push_back("rate_" + n);
  cols.push_back("feasible");
  cols.push_back("good");  // feasible and success_rate >= 0.8
  cols.push_back("diverged");
  CsvWriter csv(path, cols);
  for (const auto& c : report.cells) {
    std::vector<double> row = {static_cast<double>(c.cell)};
    for (double w : c.weights) row.push_back(w);
    row.push_back(c.mean_return);
    row.push_back(c.success_rate);
    for (Eigen::Index i = 0; i < c.rates.size(); ++i) row.push_back(c.rates[i]);
    row.push_back(c.feasible ? 1.0 : 0.0);
    row.push_back(c.good ? 1.0 : 0.0);
    row.push_back(c.diverged ? 1.0 : 0.0);
    csv.write_row(row);
  }
}

void write_sweep_plots(const SweepReport& report, const std::string& out_dir) {
  const std::size_t n_axes = report.weight_values.size();
  // Rows: product of all axes but the last; columns: the last axis.
  const int cols = static_cast<int>(report.weight_values.back().size());
  int rows = 1;
  for (std::size_t i = 0; i + 1 < n_axes; ++i)
    rows *= static_cast<int>(report.weight_values[i].size());

  std::vector<std::string> col_labels;
  for (double w : report.weight_values.back()) {
    std::ostringstream os;
    os << "w=" << w;
    col_labels.push_back(os.str());
  }
  std::vector<std::string> row_labels;
  for (int r = 0; r < rows; ++r) {
    std::ostringstream lab;
    long idx = r;
    std::vector<long> coords(n_axes >= 1 ? n_axes - 1 : 0);
    for (long i = static_cast<long>(coords.size()) - 1; i >= 0; --i) {
      const long n = static_cast<long>(report.weight_values[i].size());
      coords[i] = idx % n;
      idx /= n;
    }
    for (std::size_t i = 0; i < coords.size(); ++i) {
      if (i) lab << ' ';
      lab << report.constraint_names[i] << '=' <<
          report.weight_values[i][coords[i]];
    }
    row_labels.push_back(lab.str());
  }

  auto values_of = [&](const std::function<double(const SweepCellResult&)>& f) {
    std::vector<double> v;
    v.reserve(report.cells.size());
    for (const auto& c : report.cells) v.push_back(f(c));
    return v;
  };
  write_heat_grid(out_dir + "/heat_success.svg",
                  "success rate (good = feasible and success >= 0.8)", rows,
                  cols, values_of([](const auto& c) { return c.success_rate; }),
                  row_labels, col_labels);
  write_heat_grid(out_dir + "/heat_return.svg", "mean return", rows, cols,
                  values_of([](const auto& c) { return c.mean_return; }),
                  row_labels, col_labels);
  write_heat_grid(out_dir + "/heat_feasible.svg", "feasible (1) / infeasible (0)",
                  rows, cols,
                  values_of([](const auto& c) { return c.feasible ? 1.0 : 0.0; }),
                  row_labels, col_labels);
  write_heat_grid(out_dir + "/heat_good.svg",
                  "good performing feasible cells", rows, cols,
                  values_of([](const auto& c) { return c.good ? 1.0 : 0.0; }),
                  row_labels, col_labels);
}

}  // namespace crl
