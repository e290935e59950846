#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "edgespec/masac/env.hpp"
#include "edgespec/masac/sac.hpp"
#include "edgespec/mec/model.hpp"
#include "edgespec/mec/projection.hpp"
#include "edgespec/tma/tma.hpp"

namespace edgespec::masac {

using mec::project_actions;

/// Range of the energy weight shown to the agents. When set, the weight is a
/// feature in [-1, 1]; otherwise the feature is 0.
struct WeightRange {
  double lo = 20.0;
  double hi = 100.0;
};

/// Min-max scaling of raw quantities to [-1, 1] using bounds derived from the
/// scenario config; values outside the bounds are clipped.
class FeatureScaler {
 public:
  FeatureScaler(const mec::ScenarioConfig& cfg, std::optional<WeightRange> weights);

  int agent_obs_size() const;
  int state_size() const;

  /// One column per server: its own position, FLOPS, queue and id, every
  /// device's position, gain to this server, task, battery, power and FLOPS,
  /// then slot and weight.
  Matrix agent_observations(const mec::EnvState& state, double w) const;
  /// Servers, devices with their full gain rows, slot and weight.
  Vector global_state(const mec::EnvState& state, double w) const;

 private:
  void device_common(const mec::EnvState& state, int i, double* out) const;
  double weight_feature(double w) const;

  const mec::ScenarioConfig* cfg_;
  int m_;
  int e_;
  std::optional<WeightRange> weights_;
  double log_gain_lo_, log_gain_hi_;
  double log_dev_flops_lo_, log_dev_flops_hi_;
  double log_srv_flops_lo_, log_srv_flops_hi_;
  double log_tokens_hi_;
  double queue_hi_;
};

/// Splits agent actions (2M x E) into raw bandwidth and compute fractions.
void split_actions(const Matrix& actions, Matrix& raw_y, Matrix& raw_z);

/// Allocation for raw per-server actions: TMA picks X, fractions are
/// projected onto it.
mec::Allocation allocation_from_actions(const Matrix& actions, const mec::EnvState& state, double lambda, double w,
                                        tma::TmaResult* trace = nullptr);

/// Objective of random association with uniform allocation, drawn from a
/// stream fixed by the state's seed and slot.
double baseline_objective(const mec::EnvState& state, double lambda, double w);

/// Each server-agent samples (or, deterministic, takes the mode of) its
/// column action; TMA then fixes X and the fractions are projected.
mec::Allocation act(const mec::EnvState& state, const Masac& model, const FeatureScaler& scaler, double w, Rng& rng,
                    bool deterministic, tma::TmaResult* trace = nullptr);

struct SlotRecord {
  mec::Allocation allocation;
  mec::ObjectiveReport report;
  double baseline = 0.0;
  double reward = 0.0;
};

/// MEC system as an episodic environment: one episode is the scenario's T
/// slots from make_initial_state(config, seed). The energy weight is fixed,
/// or drawn per episode from `weight_choices` (shown to the agents).
class MecEnvironment : public Environment {
 public:
  explicit MecEnvironment(std::shared_ptr<const mec::ScenarioConfig> config, std::vector<double> weight_choices = {});

  int num_agents() const override { return config_->servers; }
  int obs_size() const override { return scaler_.agent_obs_size(); }
  int state_size() const override { return scaler_.state_size(); }
  int action_size() const override { return 2 * config_->devices; }
  int episode_length() const override { return config_->slots; }
  void reset(std::uint64_t seed) override;
  Observation observe() const override;
  StepOutcome step(const Matrix& actions) override;

  /// Overrides the weight until the next reset.
  void set_weight(double w) { w_ = w; }
  double weight() const { return w_; }
  const mec::EnvState& state() const { return state_; }
  const FeatureScaler& scaler() const { return scaler_; }
  const std::shared_ptr<const mec::ScenarioConfig>& config() const { return config_; }
  const SlotRecord& last() const { return last_; }

 private:
  std::shared_ptr<const mec::ScenarioConfig> config_;
  std::vector<double> weight_choices_;
  FeatureScaler scaler_;
  mec::EnvState state_;
  Rng rng_;
  double w_;
  SlotRecord last_;
};

/// Weight range implied by a list of training weights (none for an empty list).
std::optional<WeightRange> weight_range(const std::vector<double>& choices);

}  // namespace edgespec::masac
