#include "crl/net.hpp"

#include <cmath>
#include <sstream>

namespace crl {

namespace {

Mat apply_activation(const Mat& z, Activation act) {
  if (act == Activation::Tanh) return z.array().tanh();
  return z.array().max(0.0);
}

// Derivative evaluated at the pre-activation; relu subgradient at 0 is 0.
Mat activation_deriv(const Mat& z, Activation act) {
  if (act == Activation::Tanh) {
    Mat t = z.array().tanh();
    return 1.0 - t.array().square();
  }
  return (z.array() > 0.0).cast<double>();
}

// Column-wise layer normalisation without affine terms.
Mat layer_norm(const Mat& z, Vec* inv_std_out = nullptr) {
  Mat out(z.rows(), z.cols());
  if (inv_std_out) inv_std_out->resize(z.cols());
  const double n = static_cast<double>(z.rows());
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double mean = z.col(j).mean();
    Vec centered = z.col(j).array() - mean;
    const double var = centered.squaredNorm() / n;
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    out.col(j) = centered * inv;
    if (inv_std_out) (*inv_std_out)[j] = inv;
  }
  return out;
}

// Given g = dL/dzhat for normalised zhat with per-column inv std, returns
// dL/dz for the pre-normalisation values.
Mat layer_norm_backward(const Mat& g, const Mat& zhat, const Vec& inv_std) {
  Mat out(g.rows(), g.cols());
  const double n = static_cast<double>(g.rows());
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    const double mg = g.col(j).mean();
    const double mgz = g.col(j).dot(zhat.col(j)) / n;
    out.col(j) = inv_std[j] * (g.col(j).array() - mg - zhat.col(j).array() * mgz);
  }
  return out;
}

}  // namespace

Vec NetGrads::flat() const {
  long n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += weights[l].size() + biases[l].size();
  Vec out(n);
  long pos = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const Mat& w = weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) out[pos++] = w(i, j);
    out.segment(pos, biases[l].size()) = biases[l];
    pos += biases[l].size();
  }
  return out;
}

DenseNet::DenseNet(std::vector<int> layer_sizes, Activation activation,
                   bool layer_norm_first)
    : sizes_(std::move(layer_sizes)),
      activation_(activation),
      layer_norm_first_(layer_norm_first) {
  require(sizes_.size() >= 2, "DenseNet needs at least input and output sizes");
  for (int s : sizes_) require(s > 0, "DenseNet layer sizes must be positive");
  const int L = static_cast<int>(sizes_.size()) - 1;
  weights_.resize(L);
  biases_.resize(L);
  for (int l = 0; l < L; ++l) {
    weights_[l] = Mat::Zero(sizes_[l + 1], sizes_[l]);
    biases_[l] = Vec::Zero(sizes_[l + 1]);
  }
}

void DenseNet::init_params(Rng& rng) {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    Mat& w = weights_[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        w(i, j) = rng.uniform(-bound, bound);
    biases_[l].setZero();
  }
}

long DenseNet::param_count() const {
  long n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l)
    n += weights_[l].size() + biases_[l].size();
  return n;
}

Vec DenseNet::forward(const Vec& input) const {
  Mat out = forward(Mat(input));
  return out.col(0);
}

Mat DenseNet::forward(const Mat& inputs) const {
  if (inputs.rows() != input_dim()) {
    std::ostringstream os;
    os << "DenseNet::forward: input dim " << inputs.rows() << " != "
       << input_dim();
    throw ConfigError(os.str());
  }
  const int L = num_layers();
  Mat h = inputs;
  for (int l = 0; l < L; ++l) {
    Mat z = (weights_[l] * h).colwise() + biases_[l];
    if (l == L - 1) return z;  // linear output layer
    if (l == 0 && layer_norm_first_) z = layer_norm(z);
    h = apply_activation(z, activation_);
  }
  return h;  // unreachable for L >= 1
}

NetGrads DenseNet::backward(const Mat& inputs, const Mat& upstream,
                            Mat* input_grads) const {
  if (inputs.rows() != input_dim() || upstream.rows() != output_dim() ||
      inputs.cols() != upstream.cols()) {
    throw ConfigError("DenseNet::backward: shape mismatch");
  }
  const int L = num_layers();

  // Forward pass keeping per-layer intermediates.
  std::vector<Mat> activations(L);   // activations[l] = input to layer l
  std::vector<Mat> preacts(L);       // pre-activation of layer l (post-norm)
  Vec first_inv_std;
  activations[0] = inputs;
  Mat h = inputs;
  for (int l = 0; l < L; ++l) {
    activations[l] = h;
    Mat z = (weights_[l] * h).colwise() + biases_[l];
    if (l == L - 1) {
      preacts[l] = z;
      break;
    }
    if (l == 0 && layer_norm_first_) z = layer_norm(z, &first_inv_std);
    preacts[l] = z;
    h = apply_activation(z, activation_);
  }

  NetGrads grads;
  grads.weights.resize(L);
  grads.biases.resize(L);

  Mat g = upstream;  // dL/d(pre-activation of current layer) once scaled
  for (int l = L - 1; l >= 0; --l) {
    if (l != L - 1) {
      g = g.cwiseProduct(activation_deriv(preacts[l], activation_));
      if (l == 0 && layer_norm_first_)
        g = layer_norm_backward(g, preacts[l], first_inv_std);
    }
    grads.weights[l] = g * activations[l].transpose();
    grads.biases[l] = g.rowwise().sum();
    if (l > 0 || input_grads) g = weights_[l].transpose() * g;
  }
  if (input_grads) *input_grads = g;
  return grads;
}

Vec DenseNet::params_flat() const {
  Vec out(param_count());
  long pos = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const Mat& w = weights_[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) out[pos++] = w(i, j);
    out.segment(pos, biases_[l].size()) = biases_[l];
    pos += biases_[l].size();
  }
  return out;
}

void DenseNet::set_params_flat(const Vec& flat) {
  require(flat.size() == param_count(), "set_params_flat: size mismatch");
  long pos = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Mat& w = weights_[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = flat[pos++];
    biases_[l] = flat.segment(pos, biases_[l].size());
    pos += biases_[l].size();
  }
}

void adam_step(Vec& params, const Vec& grad, AdamState& state,
               const AdamConfig& cfg) {
  if (params.size() != grad.size() || state.m.size() != params.size())
    throw ConfigError("adam_step: shape mismatch");
  if (!grad.allFinite())
    throw DivergenceError("adam_step: non-finite gradient");
  state.t += 1;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v.array() + (1.0 - cfg.beta2) * grad.array().square();
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  params.array() -= cfg.lr * (state.m.array() / c1) /
                    ((state.v.array() / c2).sqrt() + cfg.eps);
}

void soft_update(Vec& target, const Vec& online, double tau) {
  if (target.size() != online.size())
    throw ConfigError("soft_update: shape mismatch");
  target = tau * online + (1.0 - tau) * target;
}

void soft_update(DenseNet& target, const DenseNet& online, double tau) {
  Vec t = target.params_flat();
  soft_update(t, online.params_flat(), tau);
  target.set_params_flat(t);
}

}  // namespace crl
