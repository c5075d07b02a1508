#include "crl/multipliers.hpp"

#include "crl/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace crl;

namespace {

TaskSpec upper_task(int k, double threshold = 0.1) {
  TaskSpec t;
  for (int i = 0; i < k; ++i)
    t.behavioral.push_back({"c" + std::to_string(i), BoundKind::UpperBound,
                            threshold, 0.9});
  return t;
}

TaskSpec success_only_task(double threshold = 0.9) {
  TaskSpec t;
  t.success = ConstraintSpec{"s", BoundKind::LowerBound, threshold, 0.9};
  return t;
}

// Softmax objective recomputed independently of the bank, for FD checks.
double summed_objective(const Vec& z, const Vec& c) {
  double denom = std::exp(0.0);
  for (Eigen::Index i = 0; i < z.size(); ++i) denom += std::exp(z[i]);
  double f = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i)
    f += std::exp(z[i]) / denom * c[i];
  return f;
}

}  // namespace

TEST_CASE("normalized lambdas: single constraint at the anchor is a half") {
  MultiplierBank bank(MultiplierMode::Normalized, 1, 0.0, AdamConfig{0.03});
  const Vec lam = bank.lambdas();
  CHECK(lam[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(lam[0] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("normalized lambdas: all z at -30 pushes lambda_0 to one") {
  MultiplierBank bank(MultiplierMode::Normalized, 5, -30.0, AdamConfig{0.03});
  const Vec lam = bank.lambdas();
  CHECK(std::abs(lam[0] - 1.0) < 1e-12);
  for (int i = 1; i <= 5; ++i) CHECK(lam[i] > 0.0);
}

TEST_CASE("normalized lambdas: table init against a high-precision oracle") {
  // z_k = 0.02 for five constraints, anchor 0: lambda_k = e^z/(1 + 5 e^z).
  MultiplierBank bank(MultiplierMode::Normalized, 5, 0.02, AdamConfig{0.03});
  const Vec lam = bank.lambdas();
  const long double ez = expl(0.02L);
  const long double expected = ez / (1.0L + 5.0L * ez);
  for (int i = 1; i <= 5; ++i)
    CHECK(std::abs(lam[i] - static_cast<double>(expected)) < 1e-15);
  CHECK(std::abs(lam[0] - static_cast<double>(1.0L - 5.0L * expected)) < 1e-12);
}

TEST_CASE("normalized lambdas: simplex identity and open-interval bounds") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_index(6));
    MultiplierBank bank(MultiplierMode::Normalized, n, 0.0, AdamConfig{0.03});
    bank.set_base_params(rng.uniform_vec(n, -8.0, 8.0));
    const Vec lam = bank.lambdas();
    CHECK(std::abs(lam.sum() - 1.0) < 1e-12);
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      CHECK(lam[i] > 0.0);
      CHECK(lam[i] < 1.0);
    }
  }
}

TEST_CASE("bootstrap weight takes the larger coefficient when enabled") {
  CHECK(MultiplierBank::bootstrap_weight(0.1, 0.4, true) == 0.4);
  CHECK(MultiplierBank::bootstrap_weight(0.4, 0.1, true) == 0.4);
  CHECK(MultiplierBank::bootstrap_weight(0.25, 0.25, true) == 0.25);
  CHECK(MultiplierBank::bootstrap_weight(0.1, 0.4, false) == 0.1);
  CHECK(MultiplierBank::bootstrap_weight(0.1, 0.9, false) == 0.1);
}

TEST_CASE("multiplier gradient matches finite differences of the objective") {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 1 + static_cast<int>(rng.uniform_index(4));
    TaskSpec task = upper_task(k, 0.0);
    for (auto& c : task.behavioral) c.threshold = rng.uniform();
    task.success = ConstraintSpec{"s", BoundKind::LowerBound, rng.uniform(), 0.9};
    const int n = task.num_indicators();

    MultiplierBank bank(MultiplierMode::Normalized, n, 0.0, AdamConfig{0.03});
    bank.set_base_params(rng.uniform_vec(n, -2.0, 2.0));
    Vec rates(n);
    for (int i = 0; i < n; ++i) rates[i] = rng.uniform();

    const Vec analytic = bank.objective_gradient(rates, task);
    const Vec c = constraint_coefficients(rates, task);
    auto f = [&](const Vec& z) { return summed_objective(z, c); };
    const Vec numeric = oracle::finite_diff_grad(f, bank.base_params());
    CHECK(oracle::max_rel_error(analytic, numeric) < 1e-4);
  }
}

TEST_CASE("update sign: violated upper bound raises z, satisfied lowers it") {
  Rng rng(33);
  for (int trial = 0; trial < 1000; ++trial) {
    TaskSpec task = upper_task(1, rng.uniform());
    MultiplierBank bank(MultiplierMode::Normalized, 1, rng.uniform(-2.0, 2.0),
                        AdamConfig{0.03});
    Vec rates(1);
    rates << rng.uniform();
    if (rates[0] == task.behavioral[0].threshold) continue;
    const double z_before = bank.base_params()[0];
    bank.update(rates, task);
    const double dz = bank.base_params()[0] - z_before;
    if (rates[0] > task.behavioral[0].threshold)
      CHECK(dz > 0.0);  // violation raises the multiplier
    else
      CHECK(dz < 0.0);
  }
}

TEST_CASE("update sign: success shortfall raises z, margin lowers it") {
  Rng rng(34);
  for (int trial = 0; trial < 1000; ++trial) {
    TaskSpec task = success_only_task(rng.uniform());
    MultiplierBank bank(MultiplierMode::Normalized, 1, rng.uniform(-2.0, 2.0),
                        AdamConfig{0.03});
    Vec rates(1);
    rates << rng.uniform();
    if (rates[0] == task.success->threshold) continue;
    const double z_before = bank.base_params()[0];
    bank.update(rates, task);
    const double dz = bank.base_params()[0] - z_before;
    if (rates[0] < task.success->threshold)
      CHECK(dz > 0.0);
    else
      CHECK(dz < 0.0);
  }
}

TEST_CASE("ablation mode: max-clipping keeps lambdas non-negative") {
  TaskSpec task = upper_task(2, 0.9);
  MultiplierBank bank(MultiplierMode::UnnormalizedAblation, 2, 0.01,
                      AdamConfig{0.5});
  Vec rates(2);
  rates << 0.0, 0.0;  // both satisfied: descent pushes lambda down hard
  for (int i = 0; i < 50; ++i) bank.update(rates, task);
  CHECK(bank.base_params().minCoeff() >= 0.0);
  const Vec lam = bank.lambdas();
  CHECK(lam[0] == 1.0);  // ablation keeps unit weight on the main objective
}

TEST_CASE("ablation mode: an always-violated constraint grows without bound") {
  TaskSpec task = upper_task(1, 0.01);
  MultiplierBank bank(MultiplierMode::UnnormalizedAblation, 1, 0.0,
                      AdamConfig{0.03});
  Vec rates(1);
  rates << 1.0;
  double prev = bank.lambdas()[1];
  for (int i = 0; i < 500; ++i) {
    bank.update(rates, task);
    const double cur = bank.lambdas()[1];
    REQUIRE(cur >= prev);  // nondecreasing every step
    prev = cur;
  }
  CHECK(prev > 10.0);  // exceeds any fixed bound given enough steps

  // The normalized bank under the same pressure stays inside the simplex.
  MultiplierBank norm(MultiplierMode::Normalized, 1, 0.0, AdamConfig{0.03});
  for (int i = 0; i < 500; ++i) norm.update(rates, task);
  CHECK(norm.lambdas()[1] < 1.0);
}

TEST_CASE("update aborts on non-finite parameters") {
  TaskSpec task = upper_task(1, 0.5);
  MultiplierBank bank(MultiplierMode::Normalized, 1, 0.0, AdamConfig{0.03});
  Vec bad(1);
  bad << std::nan("");
  CHECK_THROWS_AS(bank.update(bad, task), DivergenceError);
}
