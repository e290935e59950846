#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <vector>

#include "json.hpp"

#include "edgespec/masac/env.hpp"
#include "edgespec/masac/sac.hpp"

namespace edgespec::masac {

struct CurveRow {
  int episode = 0;
  double mean_reward = 0.0;
  double critic_loss = 0.0;  // episode means over updates; 0 before learning starts
  double policy_loss = 0.0;
  double entropy = 0.0;
};

struct TrainResult {
  Masac model;
  std::vector<CurveRow> curve;
};

/// Seed of the given training episode; evaluation seeds never collide with it
/// in practice because they are used raw.
std::uint64_t episode_seed(std::uint64_t master, int episode);

/// Episode loop: act (uniform actions during warmup), step, store the joint
/// transition, then updates_per_step rounds of critic, policy and target
/// updates on uniform mini-batches. Throws TrainingError if a loss exceeds
/// the divergence limit.
TrainResult train(Environment& env, const SacConfig& cfg, int episodes, std::uint64_t seed,
                  const std::function<void(const CurveRow&)>& on_episode = {});

void write_curve_csv(std::ostream& out, const std::vector<CurveRow>& curve);

/// JSON checkpoint: format tag, version, config hash, dims, SAC config,
/// free-form metadata and every parameter vector.
void save_checkpoint(const std::filesystem::path& path, const Masac& model, const nlohmann::json& metadata);

struct Checkpoint {
  Masac model;
  nlohmann::json metadata;
  std::uint64_t config_hash = 0;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::uint64_t config_hash(const AgentDims& dims, const SacConfig& cfg, const nlohmann::json& metadata);

}  // namespace edgespec::masac
