#include "crl/gaussian.hpp"

#include <cmath>

namespace crl {

namespace {
constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5*log(2*pi)
}

SquashedSample sample_squashed(const GaussianHead& head, const Vec& noise) {
  if (noise.size() != head.mean.size() || head.log_std.size() != head.mean.size())
    throw ConfigError("sample_squashed: dimension mismatch");
  const int d = head.dim();
  SquashedSample s;
  s.pre_squash.resize(d);
  s.action.resize(d);
  double logp = 0.0;
  for (int i = 0; i < d; ++i) {
    const double sigma = std::exp(head.log_std[i]);
    const double u = head.mean[i] + sigma * noise[i];
    const double a = std::tanh(u);
    s.pre_squash[i] = u;
    s.action[i] = a;
    logp += -head.log_std[i] - kHalfLog2Pi - 0.5 * noise[i] * noise[i];
    logp -= std::log(1.0 - a * a + kSquashEps);
  }
  s.log_prob = logp;
  return s;
}

Vec greedy_action(const GaussianHead& head) {
  return head.mean.array().tanh();
}

double squashed_log_prob(const GaussianHead& head, const Vec& action) {
  if (action.size() != head.mean.size())
    throw ConfigError("squashed_log_prob: dimension mismatch");
  double logp = 0.0;
  for (int i = 0; i < head.dim(); ++i) {
    const double a = action[i];
    // atanh via log1p for stability near the boundary
    const double u = 0.5 * (std::log1p(a) - std::log1p(-a));
    const double sigma = std::exp(head.log_std[i]);
    const double z = (u - head.mean[i]) / sigma;
    logp += -head.log_std[i] - kHalfLog2Pi - 0.5 * z * z;
    logp -= std::log(1.0 - a * a + kSquashEps);
  }
  return logp;
}

SquashedGrads squashed_grads(const GaussianHead& head, const Vec& noise) {
  const int d = head.dim();
  SquashedGrads g;
  g.dlogp_dmean.resize(d);
  g.dlogp_dlogstd.resize(d);
  g.daction_dmean.resize(d);
  g.daction_dlogstd.resize(d);
  for (int i = 0; i < d; ++i) {
    const double sigma = std::exp(head.log_std[i]);
    const double u = head.mean[i] + sigma * noise[i];
    const double t = std::tanh(u);
    const double one_mt2 = 1.0 - t * t;
    // d/du of -log(1 - tanh(u)^2 + eps)
    const double dcorr_du = 2.0 * t * one_mt2 / (one_mt2 + kSquashEps);
    g.dlogp_dmean[i] = dcorr_du;
    g.dlogp_dlogstd[i] = -1.0 + dcorr_du * sigma * noise[i];
    g.daction_dmean[i] = one_mt2;
    g.daction_dlogstd[i] = one_mt2 * sigma * noise[i];
  }
  return g;
}

}  // namespace crl
