#pragma once

#include <cstdint>

#include "edgespec/masac/mlp.hpp"

namespace edgespec::masac {

struct Observation {
  Matrix agents;  // obs x agents
  Vector state;   // critic's global view
};

struct StepOutcome {
  double reward = 0.0;
  bool done = false;
};

/// Episodic multi-agent environment with actions in [0, 1].
class Environment {
 public:
  virtual ~Environment() = default;
  virtual int num_agents() const = 0;
  virtual int obs_size() const = 0;
  virtual int state_size() const = 0;
  virtual int action_size() const = 0;
  virtual int episode_length() const = 0;
  virtual void reset(std::uint64_t seed) = 0;
  virtual Observation observe() const = 0;
  /// actions: action x agents.
  virtual StepOutcome step(const Matrix& actions) = 0;
};

/// Stateless two-armed bandit: an action below 0.5 pulls arm 0, otherwise
/// arm 1; rewards are the arm mean plus Gaussian noise. One step per episode.
class BanditEnvironment : public Environment {
 public:
  BanditEnvironment(double mean0 = 0.5, double mean1 = 1.0, double noise_sd = 0.1);

  int num_agents() const override { return 1; }
  int obs_size() const override { return 1; }
  int state_size() const override { return 1; }
  int action_size() const override { return 1; }
  int episode_length() const override { return 1; }
  void reset(std::uint64_t seed) override;
  Observation observe() const override;
  StepOutcome step(const Matrix& actions) override;

  double best_mean() const { return std::max(means_[0], means_[1]); }

 private:
  double means_[2];
  double noise_sd_;
  Rng rng_;
};

}  // namespace edgespec::masac
