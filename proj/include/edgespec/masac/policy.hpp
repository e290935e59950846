#pragma once

#include "edgespec/masac/mlp.hpp"

namespace edgespec::masac {

/// Bounds on the per-dimension log standard deviation. The network's raw
/// output r maps to lo + (hi - lo) * (tanh(r) + 1) / 2, so sigma never
/// reaches zero.
struct LogStdBounds {
  double lo = -5.0;
  double hi = 1.0;
};

/// Squashed Gaussian over [0, 1]^A: u ~ N(mean, sigma), a = (tanh(u) + 1) / 2.
/// The network emits 2A rows per sample, means first.
struct PolicyHead {
  Mlp net;
  LogStdBounds bounds;

  int action_size() const { return net.output_size() / 2; }
};

/// Batch of samples along with everything the reparameterised gradient needs.
struct PolicySample {
  Matrix action;                 // A x B, in [0, 1]
  Eigen::RowVectorXd log_prob;   // 1 x B, density of action on [0, 1]^A
  Matrix mean;                   // A x B
  Matrix log_std;                // A x B
  Matrix raw_log_std;            // A x B
  Matrix noise;                  // A x B
  Matrix pre_squash;             // A x B
  Mlp::Cache cache;
};

/// Sample with caller-supplied standard-normal noise (A x B).
PolicySample policy_sample(const PolicyHead& policy, const Matrix& obs, const Matrix& noise);

/// Sample with fresh noise from rng.
PolicySample policy_sample(const PolicyHead& policy, const Matrix& obs, Rng& rng);

/// The mode: (tanh(mean) + 1) / 2.
Matrix policy_mode(const PolicyHead& policy, const Matrix& obs);

/// log density of a in (0, 1) under the squashed Gaussian with the given
/// pre-squash mean and log std (scalar case).
double squashed_log_density(double a, double mean, double log_std);

/// log(1 - tanh(u)^2) without cancellation.
double log_one_minus_tanh_sq(double u);

/// Backpropagates per-sample gradients with respect to the action and the
/// log density into the policy parameters.
///   dloss_daction: A x B, dloss_dlogp: 1 x B
/// Adds into grad_params.
void policy_backward(const PolicyHead& policy, const PolicySample& sample, const Matrix& dloss_daction,
                     const Eigen::RowVectorXd& dloss_dlogp, Vector& grad_params);

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng);

}  // namespace edgespec::masac
