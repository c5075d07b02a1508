#pragma once

// Test-only oracles, independent of the library implementation paths they
// check: finite differences, quadrature, naive linear algebra, and frequency
// counting.

#include "crl/types.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

/// Central finite-difference gradient of a scalar function.
inline crl::Vec finite_diff_grad(const std::function<double(const crl::Vec&)>& f,
                                 const crl::Vec& x, double h = 1e-4) {
  crl::Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    crl::Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

/// Worst relative error between analytic and finite-difference gradients,
/// with an absolute floor so near-zero entries do not blow up the ratio.
inline double max_rel_error(const crl::Vec& analytic, const crl::Vec& numeric,
                            double floor = 1e-6) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

/// Composite Simpson quadrature on [a, b] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, int n = 20000) {
  if (n % 2 == 1) n += 1;
  const double h = (b - a) / n;
  double sum = f(a) + f(b);
  for (int i = 1; i < n; ++i) sum += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

/// Naive matrix-vector product with explicit loops.
inline crl::Vec naive_matvec(const crl::Mat& w, const crl::Vec& x,
                             const crl::Vec& b) {
  crl::Vec out(w.rows());
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    double s = b[i];
    for (Eigen::Index j = 0; j < w.cols(); ++j) s += w(i, j) * x[j];
    out[i] = s;
  }
  return out;
}

/// chi-square statistic against a uniform expectation.
inline double chi_square_uniform(const std::vector<long>& counts, long total) {
  const double expected = static_cast<double>(total) / counts.size();
  double stat = 0.0;
  for (long c : counts) {
    const double d = c - expected;
    stat += d * d / expected;
  }
  return stat;
}

/// 0.99 quantile of chi-square with 99 degrees of freedom: the p > 0.01
/// acceptance line for a 100-slot uniformity test.
constexpr double kChiSq99Df99 = 134.6416;

}  // namespace oracle
