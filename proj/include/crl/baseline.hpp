#pragma once

#include "crl/experiment.hpp"

#include <string>
#include <vector>

namespace crl {

/// Fixed penalty weights for the reward-engineering baseline, aligned with a
/// constraint list. Success is carried by the main reward, not a weight.
struct PenaltyWeights {
  std::vector<double> values;
};

/// r - sum_k w_k * e_k.
double penalty_reward(double reward, const Vec& indicators,
                      const PenaltyWeights& weights);

struct SweepCellResult {
  long cell = 0;
  std::vector<double> weights;
  double mean_return = 0.0;
  double success_rate = 0.0;
  Vec rates;  // mean over seeds, sweep-constraint order
  bool feasible = false;
  bool good = false;  // feasible and success_rate >= kGoodSuccessRate
  bool diverged = false;
  std::vector<double> per_seed_success;
};

struct SweepReport {
  std::vector<std::string> constraint_names;
  std::vector<std::vector<double>> weight_values;
  std::vector<SweepCellResult> cells;  // cell-index order

  double good_fraction() const;
};

/// Report bar for a "good performing" cell (stated in output headers).
constexpr double kGoodSuccessRate = 0.8;

/// Trains an unconstrained soft actor-critic on the penalty-scalarized reward
/// for every cell of the grid and every seed, evaluates each, and aggregates
/// per cell. Cells are independent; per-cell divergence is recorded and the
/// sweep continues. Results are merged in cell order regardless of worker
/// scheduling.
SweepReport run_sweep(const ExperimentConfig& cfg, const std::string& out_dir,
                      int n_workers = 1);

void write_sweep_csv(const SweepReport& report, const std::string& path);
void write_sweep_plots(const SweepReport& report, const std::string& out_dir);

}  // namespace crl
