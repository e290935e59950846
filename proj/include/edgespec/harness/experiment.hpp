#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "edgespec/baselines/baselines.hpp"
#include "edgespec/harness/decode_study.hpp"
#include "edgespec/masac/sac.hpp"
#include "edgespec/mec/types.hpp"

namespace edgespec::harness {

struct TrainingSpec {
  int episodes = 500;
  std::uint64_t seed = 7;
  /// Energy weights drawn per training episode; empty trains at the scenario w.
  std::vector<double> weight_choices;
  masac::SacConfig sac;
};

/// One experiment: a scenario plus everything the CLI commands need. Every
/// run is fully determined by this and a seed.
struct ExperimentSpec {
  mec::ScenarioConfig scenario;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<baselines::Policy> policies{baselines::Policy::random, baselines::Policy::max_sinr,
                                          baselines::Policy::max_compute, baselines::Policy::tma_masac};
  /// Energy-weight axis of sweep-w.
  std::vector<double> weights{20.0, 60.0, 100.0};
  TrainingSpec training;
  DecodeStudySpec decode;
  std::string output_dir = "out";
  /// Checkpoint used by eval and sweep-w when none is given on the command line.
  std::optional<std::filesystem::path> checkpoint;

  void validate() const;
};

/// `scenario` may be an inline object or a path relative to `base_dir`.
ExperimentSpec experiment_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
ExperimentSpec load_experiment(const std::filesystem::path& path);

}  // namespace edgespec::harness
