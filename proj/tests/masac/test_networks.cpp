#include <cmath>

#include "doctest.h"
#include "edgespec/masac/mlp.hpp"
#include "edgespec/masac/policy.hpp"
#include "edgespec/masac/sac.hpp"

using namespace edgespec;
using namespace edgespec::masac;

namespace {

Vector random_direction(Eigen::Index n, Rng& rng) {
  Vector v = standard_normal(n, 1, rng);
  return v / v.norm();
}

// Directional derivative check: analytic g.v against a central difference.
template <typename Loss>
double directional_error(const Vector& params, const Vector& grad, Loss loss, Rng& rng, double h = 1e-5) {
  const Vector v = random_direction(params.size(), rng);
  const double analytic = grad.dot(v);
  const double numeric = (loss(params + h * v) - loss(params - h * v)) / (2.0 * h);
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

}  // namespace

TEST_CASE("mlp parameter and input gradients match finite differences") {
  Rng rng(1);
  for (int probe = 0; probe < 10; ++probe) {
    const std::vector<int> sizes{5, 7, 6, 3};
    Mlp net(sizes, rng);
    const Matrix x = standard_normal(5, 4, rng);
    const Matrix w = standard_normal(3, 4, rng);  // loss = sum(w .* out)
    Mlp::Cache cache;
    net.forward(x, &cache);
    Vector grad = Vector::Zero(net.num_params());
    const Matrix gx = net.backward(cache, w, grad);
    auto loss_params = [&](const Vector& p) { return Mlp(sizes, p).forward(x).cwiseProduct(w).sum(); };
    CHECK(directional_error(net.params(), grad, loss_params, rng) < 1e-4);
    const Vector xv = Eigen::Map<const Vector>(x.data(), x.size());
    const Vector gxv = Eigen::Map<const Vector>(gx.data(), gx.size());
    auto loss_input = [&](const Vector& flat) {
      return net.forward(Eigen::Map<const Matrix>(flat.data(), 5, 4)).cwiseProduct(w).sum();
    };
    CHECK(directional_error(xv, gxv, loss_input, rng) < 1e-4);
  }
}

TEST_CASE("mlp forward is deterministic and parameters round trip") {
  Rng rng(2);
  Mlp net({3, 4, 2}, rng);
  const Matrix x = standard_normal(3, 5, rng);
  CHECK(net.forward(x) == net.forward(x));
  CHECK(Mlp(net.sizes(), net.params()).forward(x) == net.forward(x));
  CHECK(net.num_params() == 3 * 4 + 4 + 4 * 2 + 2);
  CHECK_THROWS(Mlp({3, 2}, Vector::Zero(3)));
}

TEST_CASE("soft update follows the Polyak recurrence") {
  Vector phi = Vector::Ones(4);
  Vector bar = Vector::Zero(4);
  Vector copy = bar;
  soft_update(phi, copy, 1.0);
  CHECK(copy == phi);
  soft_update(phi, bar, 0.5);
  CHECK(bar == Vector::Constant(4, 0.5));
  Vector track = Vector::Zero(4);
  double gap = 1.0;
  for (int k = 0; k < 50; ++k) {
    soft_update(phi, track, 0.1);
    gap *= 0.9;
    CHECK((phi - track).cwiseAbs().maxCoeff() == doctest::Approx(gap).epsilon(1e-12));
  }
  CHECK_THROWS(soft_update(phi, track, 0.0));
  CHECK_THROWS(soft_update(phi, track, 1.5));
}

TEST_CASE("adam moves against the gradient and clips") {
  Vector p = Vector::Zero(2);
  Adam opt(2, 0.1);
  Vector g(2);
  g << 1.0, -2.0;
  opt.step(p, g);
  CHECK(p[0] == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(p[1] == doctest::Approx(0.1).epsilon(1e-6));
  Vector q = Vector::Zero(2);
  Adam frozen(2, 0.0);
  frozen.step(q, g);
  CHECK(q.isZero());
}

TEST_CASE("policy samples are reproducible and inside the unit box") {
  Rng init(3);
  PolicyHead head{Mlp({4, 8, 6}, init), {}};
  const Matrix obs = standard_normal(4, 16, init);
  Rng a(9), b(9);
  const auto s1 = policy_sample(head, obs, a);
  const auto s2 = policy_sample(head, obs, b);
  CHECK(s1.action == s2.action);
  CHECK(s1.log_prob == s2.log_prob);
  CHECK(s1.action.minCoeff() >= 0.0);
  CHECK(s1.action.maxCoeff() <= 1.0);
  const Matrix mode = policy_mode(head, obs);
  CHECK(((mode.array() >= 0.0) && (mode.array() <= 1.0)).all());
}

TEST_CASE("collapsed variance head is held at the floor") {
  // Output biases drive the raw log std to -1e6: sigma sits at exp(lo).
  const std::vector<int> sizes{1, 2};
  Vector params = Vector::Zero(Mlp::param_count(sizes));
  params[2] = 0.3;    // mean bias
  params[3] = -1e6;   // raw log std bias
  PolicyHead head{Mlp(sizes, params), {-5.0, 1.0}};
  Rng rng(4);
  const auto s = policy_sample(head, Matrix::Zero(1, 100), rng);
  CHECK(s.log_std.maxCoeff() == doctest::Approx(-5.0));
  CHECK(s.log_prob.allFinite());
  const double squashed_mean = (std::tanh(0.3) + 1.0) / 2.0;
  CHECK(std::abs(s.action.mean() - squashed_mean) < 0.01);
  CHECK(policy_mode(head, Matrix::Zero(1, 1))(0, 0) == doctest::Approx(squashed_mean));
}

TEST_CASE("log density of a one-dimensional head matches a 1e5-sample histogram") {
  const std::vector<int> sizes{1, 2};
  for (auto [mean, log_std] : {std::pair{0.4, -0.3}, std::pair{-1.0, 0.5}, std::pair{0.0, -1.5}}) {
    Vector params = Vector::Zero(Mlp::param_count(sizes));
    params[2] = mean;
    params[3] = std::atanh((log_std - -5.0) / 3.0 - 1.0);  // inverse of the log-std squashing
    PolicyHead head{Mlp(sizes, params), {-5.0, 1.0}};
    Rng rng(5);
    const int n = 100000;
    const auto s = policy_sample(head, Matrix::Zero(1, n), rng);
    CHECK(s.log_std(0, 0) == doctest::Approx(log_std).epsilon(1e-12));
    // The sample's own log_prob agrees with the closed-form density.
    for (int k = 0; k < 20; ++k)
      CHECK(s.log_prob[k] == doctest::Approx(squashed_log_density(s.action(0, k), mean, log_std)).epsilon(1e-8));
    const int bins = 50;
    std::vector<double> hist(bins, 0.0);
    for (int k = 0; k < n; ++k) hist[std::min(bins - 1, int(s.action(0, k) * bins))] += 1.0 / n;
    double l1 = 0.0;
    for (int b = 0; b < bins; ++b) {
      // Midpoint rule on 200 sub-intervals of the bin.
      double mass = 0.0;
      const int sub = 200;
      for (int q = 0; q < sub; ++q) {
        const double a = (b + (q + 0.5) / sub) / bins;
        mass += std::exp(squashed_log_density(a, mean, log_std)) / (bins * sub);
      }
      l1 += std::abs(hist[b] - mass);
    }
    CHECK(l1 < 0.03);
  }
}

TEST_CASE("reward normalises by the baseline") {
  CHECK(reward(2.0, 2.0) == -1.0);
  CHECK(reward(0.0, 2.0) == 0.0);
  CHECK(reward(1.0, 2.0) == -0.5);
  CHECK_THROWS(reward(1.0, 0.0));
  CHECK_THROWS(reward(1.0, -1.0));
}
