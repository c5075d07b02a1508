#pragma once

#include "crl/rng.hpp"
#include "crl/types.hpp"

#include <vector>

namespace crl {

enum class Activation { Tanh, Relu };

constexpr double kLayerNormEps = 1e-5;

/// Per-layer parameter gradients mirroring DenseNet storage.
struct NetGrads {
  std::vector<Mat> weights;
  std::vector<Vec> biases;

  /// Canonical flat order: for each layer, W row-major then b.
  Vec flat() const;
};

/// Fully-connected network with a linear output layer and explicit
/// parameters. Hidden activations are all tanh or all relu; optionally the
/// first hidden pre-activations are layer-normalised (no affine terms) before
/// the activation.
class DenseNet {
 public:
  DenseNet() = default;
  DenseNet(std::vector<int> layer_sizes, Activation activation,
           bool layer_norm_first = false);

  /// Weights uniform in ±1/sqrt(fan_in), biases zero. Entries are drawn in
  /// canonical flat order so initialisation is reproducible from the stream.
  void init_params(Rng& rng);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(weights_.size()); }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  Activation activation() const { return activation_; }
  bool layer_norm_first() const { return layer_norm_first_; }
  long param_count() const;

  Vec forward(const Vec& input) const;
  /// Batch forward; column j of the result is forward(inputs.col(j)).
  Mat forward(const Mat& inputs) const;

  /// Gradients of L = sum_j <upstream.col(j), forward(inputs.col(j))> with
  /// respect to every parameter, and optionally the inputs.
  NetGrads backward(const Mat& inputs, const Mat& upstream,
                    Mat* input_grads = nullptr) const;

  Vec params_flat() const;
  void set_params_flat(const Vec& flat);

  const Mat& weight(int layer) const { return weights_[layer]; }
  const Vec& bias(int layer) const { return biases_[layer]; }
  Mat& weight(int layer) { return weights_[layer]; }
  Vec& bias(int layer) { return biases_[layer]; }

 private:
  std::vector<int> sizes_;
  Activation activation_ = Activation::Tanh;
  bool layer_norm_first_ = false;
  std::vector<Mat> weights_;  // weights_[l]: sizes_[l+1] x sizes_[l]
  std::vector<Vec> biases_;
};

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second-moment accumulators plus step counter.
struct AdamState {
  AdamState() = default;
  explicit AdamState(Eigen::Index n) : m(Vec::Zero(n)), v(Vec::Zero(n)) {}
  Vec m, v;
  long t = 0;
};

/// One bias-corrected Adam update in place. Throws DivergenceError if the
/// gradient is non-finite.
void adam_step(Vec& params, const Vec& grad, AdamState& state,
               const AdamConfig& cfg);

/// target <- tau*online + (1-tau)*target, element-wise.
void soft_update(Vec& target, const Vec& online, double tau);
void soft_update(DenseNet& target, const DenseNet& online, double tau);

}  // namespace crl
