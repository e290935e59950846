#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "edgespec/common/rng.hpp"
#include "edgespec/mec/types.hpp"

namespace edgespec::mec {

/// Parses a scenario. Unknown keys and out-of-range values raise ConfigError.
ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig load_scenario(const std::filesystem::path& path);

TaskKind task_kind_from_string(const std::string& name);

/// Slot-0 state: device placement, profiles, batteries, channel, queues and
/// tasks, all drawn from named streams of `seed`.
EnvState make_initial_state(std::shared_ptr<const ScenarioConfig> config, std::uint64_t seed);

/// Draws one task for `owner` from the scenario's task profiles.
Task draw_task(const ScenarioConfig& cfg, int owner, Rng& rng);

/// Advances one slot: random-waypoint moves, fresh channel, battery drain
/// from last_energy_j, new queue lengths and tasks.
EnvState step_env(const EnvState& state, Rng& rng);

}  // namespace edgespec::mec
