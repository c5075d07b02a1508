#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace crl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Malformed configuration, dimension mismatch, or unreadable file.
/// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A loss, gradient, or parameter went non-finite during training.
/// The CLI maps this to exit code 3.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Not enough stored samples to honor a batch request.
class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

}  // namespace crl
