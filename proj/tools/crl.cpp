#include "crl/baseline.hpp"
#include "crl/experiment.hpp"
#include "crl/types.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <thread>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitDivergence = 3;

int default_jobs() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

struct CommonOverrides {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  long steps = 0;
  bool steps_set = false;
  std::string mode;
  bool no_bootstrap = false;

  void apply(crl::ExperimentConfig& cfg) const {
    if (seed_set) {
      cfg.seed = seed;
      cfg.seeds.clear();
    }
    if (!out.empty()) cfg.out_dir = out;
    if (steps_set) cfg.total_steps = steps;
    if (!mode.empty()) {
      if (mode == "normalized")
        cfg.multiplier_mode = crl::MultiplierMode::Normalized;
      else if (mode == "unnormalized")
        cfg.multiplier_mode = crl::MultiplierMode::UnnormalizedAblation;
      else
        throw crl::ConfigError("unknown --mode: " + mode);
    }
    if (no_bootstrap) cfg.use_bootstrap = false;
  }
};

void add_common(CLI::App* cmd, CommonOverrides& ov) {
  cmd->add_option("--seed", ov.seed, "override the config seed")
      ->each([&ov](const std::string&) { ov.seed_set = true; });
  cmd->add_option("--out", ov.out, "override the output directory");
  cmd->add_option("--steps", ov.steps, "override total training steps")
      ->each([&ov](const std::string&) { ov.steps_set = true; });
  cmd->add_option("--mode", ov.mode, "multiplier mode: normalized|unnormalized");
  cmd->add_flag("--no-bootstrap", ov.no_bootstrap,
                "disable the bootstrap constraint");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"constrained-RL toolkit: behavior specification via indicator "
               "constraints on a soft actor-critic"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, run_dir;
  std::string trajectory_csv;
  int episodes = 0;
  int jobs = default_jobs();
  CommonOverrides ov;

  CLI::App* train = app.add_subcommand("train", "train one or more seeds");
  train->add_option("config", config_path, "experiment config (JSON)")
      ->required();
  add_common(train, ov);
  train->add_option("--jobs", jobs, "parallel seed workers");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  eval->add_option("config", config_path, "experiment config (JSON)")
      ->required();
  eval->add_option("--episodes", episodes, "evaluation episodes");
  eval->add_option("--dump", trajectory_csv, "write per-step trajectory CSV");
  add_common(eval, ov);

  CLI::App* sweep = app.add_subcommand(
      "sweep", "reward-engineering grid sweep over penalty weights");
  sweep->add_option("config", config_path, "experiment config (JSON)")
      ->required();
  sweep->add_option("--jobs", jobs, "parallel cell workers");
  add_common(sweep, ov);

  CLI::App* diagnose = app.add_subcommand(
      "diagnose", "two-phase impossible-constraint diagnostic, both modes");
  diagnose->add_option("config", config_path, "experiment config (JSON)")
      ->required();
  add_common(diagnose, ov);

  CLI::App* plot = app.add_subcommand("plot", "render SVG charts for a run");
  plot->add_option("run_dir", run_dir, "run directory with CSVs")->required();
  plot->add_option("--out", ov.out, "chart output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (plot->parsed()) {
      crl::emit_plots(run_dir, ov.out.empty() ? run_dir : ov.out);
      return kExitOk;
    }

    crl::ExperimentConfig cfg =
        crl::ExperimentConfig::from_json_file(config_path);
    ov.apply(cfg);
    cfg.validate();

    if (train->parsed()) {
      const auto seeds = cfg.seed_list();
      std::vector<crl::RunResult> results(seeds.size());
      crl::parallel_for(
          static_cast<long>(seeds.size()), jobs, [&](long i) {
            const std::string dir =
                cfg.out_dir + "/seed_" + std::to_string(seeds[i]);
            results[i] = crl::run_training(cfg, seeds[i], dir);
          });
      bool any_aborted = false;
      for (std::size_t i = 0; i < seeds.size(); ++i) {
        const auto& r = results[i];
        if (r.aborted) {
          any_aborted = true;
          std::cout << "seed " << seeds[i] << ": diverged (" << r.abort_message
                    << ")\n";
          continue;
        }
        std::cout << "seed " << seeds[i]
                  << ": return=" << r.final_report.mean_return
                  << " success=" << r.final_report.success_rate;
        for (std::size_t c = 0; c < r.log.constraint_names.size(); ++c)
          std::cout << " rate_" << r.log.constraint_names[c] << '='
                    << r.final_report.rates[static_cast<Eigen::Index>(c)];
        std::cout << '\n';
      }
      return any_aborted ? kExitDivergence : kExitOk;
    }

    if (eval->parsed()) {
      const int n = episodes > 0 ? episodes : cfg.eval_episodes;
      const crl::EvalReport rep = crl::evaluate_checkpoint(
          checkpoint_path, cfg, n, cfg.seed, trajectory_csv);
      std::cout << "episodes=" << n << " return=" << rep.mean_return
                << " success=" << rep.success_rate;
      const crl::TaskSpec task = cfg.task();
      for (int i = 0; i < task.num_indicators(); ++i)
        std::cout << " rate_" << task.indicator_spec(i).name << '='
                  << rep.rates[i];
      std::cout << '\n';
      return kExitOk;
    }

    if (sweep->parsed()) {
      const crl::SweepReport report =
          crl::run_sweep(cfg, cfg.out_dir, jobs);
      std::cout << "cells=" << report.cells.size()
                << " good_fraction=" << report.good_fraction()
                << " (good = feasible and success >= "
                << crl::kGoodSuccessRate << ")\n";
      return kExitOk;
    }

    if (diagnose->parsed()) {
      const crl::DiagnosticResult res = crl::run_diagnostic(cfg, cfg.out_dir);
      std::cout << "normalized: "
                << (res.normalized.aborted ? "diverged" : "completed")
                << ", max lambda " << res.normalized.log.max_lambda << '\n';
      std::cout << "unnormalized: "
                << (res.unnormalized.aborted ? "diverged" : "completed")
                << ", max lambda " << res.unnormalized.log.max_lambda << '\n';
      return kExitOk;  // an unnormalized divergence is an outcome, not an error
    }
  } catch (const crl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const crl::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
