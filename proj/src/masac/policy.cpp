#include "edgespec/masac/policy.hpp"

#include <cmath>
#include <numbers>

#include "edgespec/common/error.hpp"

namespace edgespec::masac {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

double log_one_minus_tanh_sq(double u) {
  return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
}

double squashed_log_density(double a, double mean, double log_std) {
  require(a > 0.0 && a < 1.0, "squashed_log_density: action outside (0, 1)");
  const double u = std::atanh(2.0 * a - 1.0);
  const double z = (u - mean) / std::exp(log_std);
  return -0.5 * z * z - log_std - kHalfLog2Pi - log_one_minus_tanh_sq(u) + std::numbers::ln2;
}

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) out(r, c) = normal(rng);
  return out;
}

PolicySample policy_sample(const PolicyHead& policy, const Matrix& obs, const Matrix& noise) {
  const int a_dim = policy.action_size();
  require(noise.rows() == a_dim && noise.cols() == obs.cols(), "policy_sample: noise shape mismatch");
  PolicySample s;
  const Matrix out = policy.net.forward(obs, &s.cache);
  s.mean = out.topRows(a_dim);
  s.raw_log_std = out.bottomRows(a_dim);
  const double lo = policy.bounds.lo;
  const double half_span = 0.5 * (policy.bounds.hi - lo);
  s.log_std = (lo + half_span * (s.raw_log_std.array().tanh() + 1.0)).matrix();
  s.noise = noise;
  s.pre_squash = s.mean.array() + s.log_std.array().exp() * noise.array();
  s.action = ((s.pre_squash.array().tanh() + 1.0) * 0.5).matrix();
  s.log_prob = Eigen::RowVectorXd::Zero(obs.cols());
  for (Eigen::Index b = 0; b < obs.cols(); ++b) {
    double lp = 0.0;
    for (int k = 0; k < a_dim; ++k) {
      const double e = noise(k, b);
      lp += -0.5 * e * e - s.log_std(k, b) - kHalfLog2Pi - log_one_minus_tanh_sq(s.pre_squash(k, b)) +
            std::numbers::ln2;
    }
    s.log_prob[b] = lp;
  }
  return s;
}

PolicySample policy_sample(const PolicyHead& policy, const Matrix& obs, Rng& rng) {
  return policy_sample(policy, obs, standard_normal(policy.action_size(), obs.cols(), rng));
}

Matrix policy_mode(const PolicyHead& policy, const Matrix& obs) {
  const Matrix out = policy.net.forward(obs);
  return ((out.topRows(policy.action_size()).array().tanh() + 1.0) * 0.5).matrix();
}

void policy_backward(const PolicyHead& policy, const PolicySample& sample, const Matrix& dloss_daction,
                     const Eigen::RowVectorXd& dloss_dlogp, Vector& grad_params) {
  const int a_dim = policy.action_size();
  const Eigen::Index batch = sample.action.cols();
  require(dloss_daction.rows() == a_dim && dloss_daction.cols() == batch && dloss_dlogp.size() == batch,
          "policy_backward: gradient shape mismatch");
  const double half_span = 0.5 * (policy.bounds.hi - policy.bounds.lo);
  Matrix grad_out(2 * a_dim, batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int k = 0; k < a_dim; ++k) {
      const double t = std::tanh(sample.pre_squash(k, b));
      const double sigma_eps = std::exp(sample.log_std(k, b)) * sample.noise(k, b);
      // d(log_prob)/du = 2 tanh(u) from the squashing term; the Gaussian
      // term is constant in u for fixed noise, and contributes -1 per log std.
      const double du = dloss_daction(k, b) * 0.5 * (1.0 - t * t) + dloss_dlogp[b] * 2.0 * t;
      const double dlog_std = du * sigma_eps - dloss_dlogp[b];
      const double r = std::tanh(sample.raw_log_std(k, b));
      grad_out(k, b) = du;
      grad_out(a_dim + k, b) = dlog_std * half_span * (1.0 - r * r);
    }
  }
  policy.net.backward(sample.cache, grad_out, grad_params);
}

}  // namespace edgespec::masac
