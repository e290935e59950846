#include "edgespec/masac/env.hpp"

#include "edgespec/common/error.hpp"

namespace edgespec::masac {

BanditEnvironment::BanditEnvironment(double mean0, double mean1, double noise_sd)
    : means_{mean0, mean1}, noise_sd_(noise_sd) {
  require(noise_sd >= 0.0, "BanditEnvironment: noise must be non-negative");
}

void BanditEnvironment::reset(std::uint64_t seed) { rng_ = make_stream(seed, "bandit"); }

Observation BanditEnvironment::observe() const { return {Matrix::Zero(1, 1), Vector::Zero(1)}; }

StepOutcome BanditEnvironment::step(const Matrix& actions) {
  require(actions.rows() == 1 && actions.cols() == 1, "BanditEnvironment::step: expected one action");
  const int arm = actions(0, 0) >= 0.5 ? 1 : 0;
  const double noise = noise_sd_ > 0.0 ? std::normal_distribution<double>(0.0, noise_sd_)(rng_) : 0.0;
  return {means_[arm] + noise, true};
}

}  // namespace edgespec::masac
