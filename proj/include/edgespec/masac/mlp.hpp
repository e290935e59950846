#pragma once

#include <vector>

#include <Eigen/Dense>

#include "edgespec/common/rng.hpp"

namespace edgespec::masac {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Fully connected network with tanh hidden layers and a linear output.
/// Batches are column-major: one sample per column.
class Mlp {
 public:
  struct Cache {
    std::vector<Matrix> activations;  // input, then every hidden layer
  };

  Mlp() = default;
  /// Glorot-uniform weights, zero biases; the last layer is multiplied by
  /// output_scale.
  Mlp(std::vector<int> sizes, Rng& rng, double output_scale = 1.0);
  /// Network with the given parameter vector (layout as params()).
  Mlp(std::vector<int> sizes, Vector params);

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  Eigen::Index num_params() const { return params_.size(); }

  /// Layer by layer: weights (out x in, column-major) then biases.
  const Vector& params() const { return params_; }
  Vector& params() { return params_; }

  Matrix forward(const Matrix& input, Cache* cache = nullptr) const;

  /// Adds dL/dparams into grad_params and returns dL/dinput, given dL/doutput
  /// for the batch whose forward pass filled cache.
  Matrix backward(const Cache& cache, const Matrix& grad_output, Vector& grad_params) const;

  static Eigen::Index param_count(const std::vector<int>& sizes);

 private:
  std::vector<int> sizes_;
  Vector params_;
};

/// Adam on a flat parameter vector (minimises).
class Adam {
 public:
  Adam() = default;
  Adam(Eigen::Index size, double learning_rate, double max_grad_norm = 0.0);

  void step(Vector& params, const Vector& grad);
  double learning_rate() const { return lr_; }

 private:
  double lr_ = 0.0;
  double max_norm_ = 0.0;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  Vector m_;
  Vector v_;
};

/// target <- xi * source + (1 - xi) * target.
void soft_update(const Vector& source, Vector& target, double xi);

}  // namespace edgespec::masac
