#include "crl/experiment.hpp"

#include "crl/baseline.hpp"
#include "crl/checkpoint.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace crl;
namespace fs = std::filesystem;

namespace {

std::string tmp_dir(const std::string& name) {
  const std::string dir = "test_runs/" + name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Small, fast configuration used by the orchestration tests.
ExperimentConfig tiny_experiment() {
  ExperimentConfig cfg;
  cfg.name = "tiny";
  cfg.seed = 3;
  cfg.total_steps = 1500;
  cfg.eval_period = 500;
  cfg.eval_episodes = 2;
  cfg.env.episode_length = 60;
  cfg.agent.hidden = {8};
  cfg.agent.batch_theta = 32;
  cfg.agent.batch_lambda = 64;
  cfg.agent.period_theta = 25;
  cfg.agent.period_lambda = 50;
  cfg.agent.warmup_steps = 100;
  cfg.agent.random_steps = 200;
  cfg.agent.buffer_capacity = 4096;
  cfg.behavioral = {{"in_lava", BoundKind::UpperBound, 0.01, 0.9}};
  return cfg;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("config: JSON round trip preserves every field") {
  ExperimentConfig cfg = tiny_experiment();
  cfg.use_bootstrap = true;
  cfg.success = ConstraintSpec{"reached_goal", BoundKind::LowerBound, 0.9, 0.9};
  cfg.multiplier_mode = MultiplierMode::UnnormalizedAblation;
  const ExperimentConfig back =
      ExperimentConfig::from_json_text(cfg.to_json_text());
  CHECK(back.name == cfg.name);
  CHECK(back.total_steps == cfg.total_steps);
  CHECK(back.multiplier_mode == cfg.multiplier_mode);
  CHECK(back.use_bootstrap == cfg.use_bootstrap);
  CHECK(back.behavioral.size() == 1);
  CHECK(back.behavioral[0].name == "in_lava");
  CHECK(back.success.has_value());
  CHECK(back.success->threshold == 0.9);
  CHECK(back.env.episode_length == 60);
  CHECK(back.agent.batch_theta == 32);
}

TEST_CASE("config: defaults carry the hyperparameter-table values") {
  const ExperimentConfig cfg = ExperimentConfig::from_json_text("{}");
  CHECK(cfg.agent.gamma == 0.9);
  CHECK(cfg.agent.alpha == 0.02);
  CHECK(cfg.agent.tau == 0.005);
  CHECK(cfg.agent.lr == 0.0003);
  CHECK(cfg.agent.multiplier_lr == 0.03);
  CHECK(cfg.agent.batch_theta == 256);
  CHECK(cfg.agent.batch_lambda == 2000);
  CHECK(cfg.agent.period_theta == 200);
  CHECK(cfg.agent.period_lambda == 2000);
  CHECK(cfg.agent.random_steps == 10000);
  CHECK(cfg.agent.warmup_steps == 2560);
  CHECK(cfg.agent.buffer_capacity == 1000000);
  CHECK(cfg.agent.z_init == 0.02);
  CHECK(cfg.eval_episodes == 10);
}

TEST_CASE("config: malformed input raises configuration errors") {
  CHECK_THROWS_AS(ExperimentConfig::from_json_text("{nope"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(
                      R"({"constraints":[{"name":"x","threshold":2.0}]})"),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(
                      R"({"eval_period":0})"),
                  ConfigError);
  CHECK_THROWS_AS(
      ExperimentConfig::from_json_text(
          R"({"constraints":[{"name":"a","threshold":0.1},
                             {"name":"a","threshold":0.2}]})"),
      ConfigError);
}

TEST_CASE("csv: 17-significant-digit rendering round-trips") {
  const double values[] = {1.0 / 3.0, 0.1, -2.5e-17, 123456.789, 0.0};
  for (double v : values) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("evaluate: an always-recharge policy never moves") {
  ExperimentConfig cfg = tiny_experiment();
  cfg.behavioral = {{"below_energy", BoundKind::UpperBound, 0.01, 0.9},
                    {"above_speed", BoundKind::UpperBound, 0.01, 0.9}};
  auto env = cfg.make_env(5);
  auto always_recharge = [](const Vec&) {
    Vec a(4);
    a << 0.0, 0.0, 0.0, 1.0;
    return a;
  };
  const EvalReport rep =
      evaluate_actions(always_recharge, *env, cfg.task(), 5);
  CHECK(rep.success_rate == 0.0);
  CHECK(rep.rates[0] == 0.0);  // energy stays full while recharging
  CHECK(rep.rates[1] == 0.0);  // immobilised, never above the speed limit
}

TEST_CASE("evaluate: rates equal an offline recount of dumped indicators") {
  ExperimentConfig cfg = tiny_experiment();
  const std::string dir = tmp_dir("eval_recount");
  auto env = cfg.make_env(7);
  Rng policy_rng(11);
  auto wander = [&policy_rng](const Vec&) {
    return policy_rng.uniform_vec(4, -1.0, 1.0);
  };
  const std::string traj = dir + "/trajectory.csv";
  const EvalReport rep = evaluate_actions(wander, *env, cfg.task(), 4, traj);
  const CsvTable t = read_csv(traj);
  const auto lava = t.column("event_in_lava");
  double sum = 0.0;
  for (double v : lava) sum += v;
  CHECK(rep.rates[0] ==
        doctest::Approx(sum / static_cast<double>(lava.size())).epsilon(1e-12));
}

TEST_CASE("run_training writes metrics, multipliers, and a checkpoint") {
  ExperimentConfig cfg = tiny_experiment();
  const std::string dir = tmp_dir("train_small");
  const RunResult res = run_training(cfg, cfg.seed, dir);
  CHECK_FALSE(res.aborted);
  CHECK(fs::exists(dir + "/metrics.csv"));
  CHECK(fs::exists(dir + "/multipliers.csv"));
  CHECK(fs::exists(dir + "/checkpoint.bin"));
  CHECK(fs::exists(dir + "/config.json"));
  const CsvTable metrics = read_csv(dir + "/metrics.csv");
  CHECK(metrics.num_rows() == cfg.total_steps / cfg.eval_period);
  CHECK(metrics.column_index("rate_in_lava") >= 0);
  CHECK(metrics.column_index("lambda_in_lava") >= 0);
  const CsvTable mult = read_csv(dir + "/multipliers.csv");
  CHECK(res.log.multiplier_updates == mult.num_rows());
  for (double err : mult.column("simplex_error")) CHECK(err < 1e-12);

  // The checkpoint reloads into an evaluation.
  const EvalReport rep =
      evaluate_checkpoint(dir + "/checkpoint.bin", cfg, 2, cfg.seed);
  CHECK(rep.rates.size() == 1);
}

TEST_CASE("run_training is byte-identical across reruns of the same seed") {
  ExperimentConfig cfg = tiny_experiment();
  const std::string d1 = tmp_dir("determinism_1");
  const std::string d2 = tmp_dir("determinism_2");
  run_training(cfg, cfg.seed, d1);
  run_training(cfg, cfg.seed, d2);
  CHECK(read_file(d1 + "/metrics.csv") == read_file(d2 + "/metrics.csv"));
  CHECK(read_file(d1 + "/multipliers.csv") ==
        read_file(d2 + "/multipliers.csv"));
  CHECK(read_file(d1 + "/checkpoint.bin") == read_file(d2 + "/checkpoint.bin"));
}

TEST_CASE("checkpoint: save/load round-trips agent parameters bit-exactly") {
  ExperimentConfig cfg = tiny_experiment();
  const TaskSpec task = cfg.task();
  auto env = cfg.make_env(1);
  SacLagrangian a(cfg.agent, task, env->observation_dim(), env->action_dim(),
                  9);
  MultiplierBank bank_a(MultiplierMode::Normalized, task.num_indicators(),
                        0.02, AdamConfig{0.03});
  ReplayBuffer buffer(cfg.agent.buffer_capacity, env->observation_dim(),
                      env->action_dim(), task.num_indicators());
  for (int t = 0; t < 300; ++t) a.train_step(*env, buffer, bank_a);

  const std::string dir = tmp_dir("checkpoint");
  save_agent_file(dir + "/ckpt.bin", a, bank_a);

  SacLagrangian b(cfg.agent, task, env->observation_dim(), env->action_dim(),
                  10);
  MultiplierBank bank_b(MultiplierMode::Normalized, task.num_indicators(),
                        0.02, AdamConfig{0.03});
  load_agent_file(dir + "/ckpt.bin", b, bank_b);
  CHECK(b.policy().params_flat() == a.policy().params_flat());
  for (int k = 0; k < a.num_heads(); ++k)
    for (int j = 0; j < 2; ++j) {
      CHECK(b.critics()[k].online[j].params_flat() ==
            a.critics()[k].online[j].params_flat());
      CHECK(b.critics()[k].target[j].params_flat() ==
            a.critics()[k].target[j].params_flat());
    }
  CHECK(bank_b.base_params() == bank_a.base_params());

  // Mismatched architectures are a configuration error.
  AgentConfig other = cfg.agent;
  other.hidden = {12};
  SacLagrangian c(other, task, env->observation_dim(), env->action_dim(), 11);
  MultiplierBank bank_c(MultiplierMode::Normalized, task.num_indicators(),
                        0.02, AdamConfig{0.03});
  CHECK_THROWS_AS(load_agent_file(dir + "/ckpt.bin", c, bank_c), ConfigError);
}

TEST_CASE("emit_plots: charts are views over the CSV rows") {
  ExperimentConfig cfg = tiny_experiment();
  const std::string dir = tmp_dir("plots");
  run_training(cfg, cfg.seed, dir);
  emit_plots(dir, dir + "/charts");
  const std::string rates_svg = read_file(dir + "/charts/rates.svg");
  const CsvTable metrics = read_csv(dir + "/metrics.csv");

  // Threshold lines at the configured values.
  CHECK(rates_svg.find("class=\"threshold\"") != std::string::npos);
  CHECK(rates_svg.find("data-value=\"" + format_double(0.01) + "\"") !=
        std::string::npos);

  // Chart point count equals CSV row count: the per-series point total is
  // rows * series count.
  const std::string return_svg = read_file(dir + "/charts/return.svg");
  const std::string marker = "data-points=\"";
  const auto pos = return_svg.find(marker);
  REQUIRE(pos != std::string::npos);
  const long points = std::stol(return_svg.substr(pos + marker.size()));
  CHECK(points == metrics.num_rows());
  CHECK(fs::exists(dir + "/charts/lambdas.svg"));
  CHECK(fs::exists(dir + "/charts/losses.svg"));
}

TEST_CASE("diagnostic run: both modes execute with identical seeds") {
  ExperimentConfig cfg = tiny_experiment();
  cfg.behavioral = {{"impossible", BoundKind::UpperBound, 0.01, 0.9}};
  cfg.diagnostic = DiagnosticConfig{600};
  cfg.total_steps = 1200;
  cfg.agent.period_lambda = 40;
  cfg.agent.batch_lambda = 40;
  const std::string dir = tmp_dir("diagnostic");
  const DiagnosticResult res = run_diagnostic(cfg, dir);
  CHECK(fs::exists(dir + "/normalized/multipliers.csv"));
  CHECK(fs::exists(dir + "/unnormalized/multipliers.csv"));
  // Normalized lambdas stay on the simplex.
  CHECK(res.normalized.log.max_lambda <= 1.0);
  // The unnormalized impossible-constraint multiplier never decreases during
  // phase 1.
  const CsvTable mult = read_csv(dir + "/unnormalized/multipliers.csv");
  const auto steps = mult.column("step");
  const auto lam = mult.column("lambda_impossible");
  double prev = 0.0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i] <= 600) {
      CHECK(lam[i] >= prev);
      prev = lam[i];
    }
  }
}

TEST_CASE("parallel_for covers every job exactly once") {
  std::vector<std::atomic<int>> hits(64);
  for (auto& h : hits) h = 0;
  parallel_for(64, 4, [&](long i) { hits[i] += 1; });
  for (auto& h : hits) CHECK(h == 1);
}
