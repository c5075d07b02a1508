#include "crl/baseline.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace crl;
namespace fs = std::filesystem;

namespace {

ExperimentConfig sweep_config(std::vector<std::vector<double>> weights,
                              long cell_steps = 400) {
  ExperimentConfig cfg;
  cfg.seed = 5;
  cfg.env.episode_length = 50;
  cfg.agent.hidden = {8};
  cfg.agent.batch_theta = 32;
  cfg.agent.batch_lambda = 32;
  cfg.agent.period_theta = 25;
  cfg.agent.period_lambda = 100000;
  cfg.agent.warmup_steps = 64;
  cfg.agent.random_steps = 100;
  cfg.agent.buffer_capacity = 4096;
  cfg.behavioral = {{"not_looking", BoundKind::UpperBound, 0.10, 0.9},
                    {"in_lava", BoundKind::UpperBound, 0.01, 0.9}};
  SweepSection sweep;
  sweep.constraint_names.clear();
  for (std::size_t i = 0; i < weights.size(); ++i)
    sweep.constraint_names.push_back(cfg.behavioral[i].name);
  sweep.weight_values = std::move(weights);
  sweep.cell_steps = cell_steps;
  sweep.eval_episodes = 2;
  sweep.seeds = {1};
  cfg.sweep = sweep;
  return cfg;
}

}  // namespace

TEST_CASE("penalty reward: inactive indicators leave the reward unchanged") {
  PenaltyWeights w{{2.0, 0.5}};
  CHECK(penalty_reward(0.3, Vec::Zero(2), w) == 0.3);
}

TEST_CASE("penalty reward: active indicator subtracts its weight") {
  PenaltyWeights w{{2.0}};
  Vec e(1);
  e << 1.0;
  CHECK(penalty_reward(0.1, e, w) == doctest::Approx(-1.9).epsilon(1e-15));
}

TEST_CASE("penalty reward is linear in the weights") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const double r = rng.normal();
    Vec e(3);
    for (int i = 0; i < 3; ++i) e[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
    PenaltyWeights a{{rng.uniform(), rng.uniform(), rng.uniform()}};
    PenaltyWeights b{{rng.uniform(), rng.uniform(), rng.uniform()}};
    PenaltyWeights ab{{a.values[0] + b.values[0], a.values[1] + b.values[1],
                       a.values[2] + b.values[2]}};
    const double lhs = penalty_reward(r, e, ab);
    const double rhs = penalty_reward(r, e, a) + penalty_reward(r, e, b) - r;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("default grid extremes bracket 0.1x to 10x of the unit reward") {
  // The stock sweep grid {0.1, 1, 10} spans the published search range
  // relative to the unit terminal reward.
  const std::vector<double> grid = {0.1, 1.0, 10.0};
  CHECK(grid.front() == 0.1);
  CHECK(grid.back() == 10.0);
}

TEST_CASE("sweep: one-constraint grid of 7 values makes 7 cells") {
  ExperimentConfig cfg =
      sweep_config({{0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0}}, 200);
  const std::string dir = "test_runs/sweep7";
  fs::remove_all(dir);
  const SweepReport report = run_sweep(cfg, dir, 2);
  CHECK(report.cells.size() == 7);
  CHECK(fs::exists(dir + "/sweep.csv"));
  CHECK(fs::exists(dir + "/heat_success.svg"));

  // Heat grid dimensions equal the sweep grid dimensions.
  std::ifstream svg(dir + "/heat_success.svg");
  std::string text((std::istreambuf_iterator<char>(svg)),
                   std::istreambuf_iterator<char>());
  CHECK(text.find("data-rows=\"1\"") != std::string::npos);
  CHECK(text.find("data-cols=\"7\"") != std::string::npos);
}

TEST_CASE("sweep: all-zero weights collapse to unconstrained training") {
  ExperimentConfig cfg = sweep_config({{0.0, 0.0}}, 300);
  const std::string dir = "test_runs/sweep_zero";
  fs::remove_all(dir);
  const SweepReport report = run_sweep(cfg, dir, 2);
  REQUIRE(report.cells.size() == 2);
  // Identical cells (same seed, same zero weights) produce identical results.
  CHECK(report.cells[0].mean_return == report.cells[1].mean_return);
  CHECK(report.cells[0].success_rate == report.cells[1].success_rate);
  CHECK(report.cells[0].rates == report.cells[1].rates);
}

TEST_CASE("sweep cells are reproducible and order-insensitive") {
  ExperimentConfig cfg = sweep_config({{0.1, 1.0}}, 250);
  const std::string d1 = "test_runs/sweep_rep1";
  const std::string d2 = "test_runs/sweep_rep2";
  fs::remove_all(d1);
  fs::remove_all(d2);
  const SweepReport a = run_sweep(cfg, d1, 1);  // serial
  const SweepReport b = run_sweep(cfg, d2, 2);  // parallel workers
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(a.cells[i].mean_return == b.cells[i].mean_return);
    CHECK(a.cells[i].success_rate == b.cells[i].success_rate);
  }
}

TEST_CASE("sweep grid indexing covers the cartesian product") {
  SweepSection s;
  s.constraint_names = {"a", "b", "c"};
  s.weight_values = {{0.1, 1.0}, {0.5}, {2.0, 3.0, 4.0}};
  CHECK(s.num_cells() == 6);
  CHECK(s.cell_weights(0) == std::vector<double>{0.1, 0.5, 2.0});
  CHECK(s.cell_weights(5) == std::vector<double>{1.0, 0.5, 4.0});
}
