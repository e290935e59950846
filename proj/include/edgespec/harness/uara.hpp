#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "edgespec/baselines/baselines.hpp"
#include "edgespec/harness/csv.hpp"
#include "edgespec/harness/experiment.hpp"
#include "edgespec/harness/stats.hpp"
#include "edgespec/masac/mec_env.hpp"
#include "edgespec/masac/train.hpp"

namespace edgespec::harness {

inline constexpr double kHighBattery = 0.8;
inline constexpr double kLowBattery = 0.2;

/// One slot of one run. Latencies are D^MD + D^ES averaged over devices;
/// energies are summed over devices, and over the two battery tiers.
struct SlotRow {
  std::string run_id;
  std::uint64_t seed = 0;
  int slot = 0;
  baselines::Policy policy = baselines::Policy::random;
  double w = 0.0;
  double latency_s = 0.0;
  double end_to_end_s = 0.0;
  double objective = 0.0;
  double energy_j = 0.0;
  double energy_high_j = 0.0;
  double energy_low_j = 0.0;
  int devices_high = 0;
  int devices_low = 0;
  double tokens_per_s = 0.0;
};

/// A trained model with the observation scaling it was trained under.
struct TrainedPolicy {
  std::shared_ptr<const mec::ScenarioConfig> scenario;  // referenced by scaler
  masac::Masac model;
  masac::FeatureScaler scaler;
};

/// Loads a checkpoint and checks that it fits `scenario`; throws ConfigError
/// if the file is missing or was trained for different dimensions.
TrainedPolicy load_trained_policy(const std::filesystem::path& path, const mec::ScenarioConfig& scenario);

/// Metadata stored with checkpoints written by the harness.
nlohmann::json checkpoint_metadata(const ExperimentSpec& spec);

/// Trains TMA-MASAC on the spec's scenario and training settings.
masac::TrainResult train_tma_masac(const ExperimentSpec& spec, std::uint64_t seed,
                                   const std::function<void(const masac::CurveRow&)>& on_episode = {});

/// Rolls the scenario's T slots from seed under one policy. Channel, tasks
/// and mobility come from the seed's env stream, so every policy sees the
/// same sequence apart from its own battery drain.
std::vector<SlotRow> run_policy(const ExperimentSpec& spec, baselines::Policy policy, std::uint64_t seed, double w,
                                const TrainedPolicy* trained);

/// Every (policy, seed) at the scenario's w, policies in spec order.
/// tma_masac without a trained policy throws ConfigError.
std::vector<SlotRow> run_uara_eval(const ExperimentSpec& spec, const TrainedPolicy* trained);

/// Every (w, policy, seed) over spec.weights.
std::vector<SlotRow> run_energy_sweep(const ExperimentSpec& spec, const TrainedPolicy* trained);

std::vector<std::string> slot_csv_header();
void write_slot_csv(std::ostream& out, const std::vector<SlotRow>& rows);
std::vector<SlotRow> slot_rows_from_csv(const CsvTable& table);

/// Per-run means over slots.
struct RunSummary {
  baselines::Policy policy = baselines::Policy::random;
  double w = 0.0;
  std::uint64_t seed = 0;
  int slots = 0;
  double latency_s = 0.0;
  double end_to_end_s = 0.0;
  double objective = 0.0;
  double energy_j = 0.0;       // mean per slot
  double energy_high_j = 0.0;  // mean per slot
  double energy_low_j = 0.0;
};

/// Groups rows by (w, policy, seed) in first-appearance order of w and
/// policy, seeds ascending.
std::vector<RunSummary> summarize_runs(const std::vector<SlotRow>& rows);

/// Across-seed statistics of one (policy, w).
struct PolicySummary {
  baselines::Policy policy = baselines::Policy::random;
  double w = 0.0;
  Summary latency;
  Summary end_to_end;
  Summary objective;
  Summary energy;
  double energy_high_j = 0.0;
  double energy_low_j = 0.0;
};

std::vector<PolicySummary> summarize_policies(const std::vector<RunSummary>& runs);

}  // namespace edgespec::harness
