#include "edgespec/harness/experiment.hpp"

#include <fstream>
#include <set>

#include "edgespec/common/error.hpp"
#include "edgespec/mec/scenario.hpp"

namespace edgespec::harness {

using nlohmann::json;

void ExperimentSpec::validate() const {
  scenario.validate();
  if (seeds.empty()) throw ConfigError("experiment: seeds must not be empty");
  if (policies.empty()) throw ConfigError("experiment: policies must not be empty");
  if (weights.empty()) throw ConfigError("experiment: weights must not be empty");
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("experiment: weights must be non-negative");
  }
  for (double w : training.weight_choices) {
    if (!(w >= 0.0)) throw ConfigError("experiment: training.weight_choices must be non-negative");
  }
  if (training.episodes < 1) throw ConfigError("experiment: training.episodes must be >= 1");
  training.sac.validate();
  decode.validate();
  if (output_dir.empty()) throw ConfigError("experiment: output_dir must not be empty");
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

json parse_file(const std::filesystem::path& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + what + " " + path.string());
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + " " + path.string() + ": " + e.what());
  }
}

}  // namespace

ExperimentSpec experiment_from_json(const json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j, {"scenario", "seeds", "policies", "weights", "training", "decode_study", "output_dir", "checkpoint"},
                 "experiment");
  ExperimentSpec s;
  try {
    if (!j.contains("scenario")) throw ConfigError("experiment: missing 'scenario'");
    const json& sc = j.at("scenario");
    if (sc.is_string()) {
      s.scenario = mec::load_scenario(base_dir / sc.get<std::string>());
    } else {
      s.scenario = mec::scenario_from_json(sc);
    }
    if (j.contains("seeds")) s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("policies")) {
      s.policies.clear();
      for (const auto& p : j.at("policies")) s.policies.push_back(baselines::policy_from_string(p.get<std::string>()));
    }
    if (j.contains("weights")) s.weights = j.at("weights").get<std::vector<double>>();
    if (j.contains("training")) {
      const json& t = j.at("training");
      reject_unknown(t, {"episodes", "seed", "weight_choices", "sac"}, "experiment.training");
      if (t.contains("episodes")) s.training.episodes = t.at("episodes").get<int>();
      if (t.contains("seed")) s.training.seed = t.at("seed").get<std::uint64_t>();
      if (t.contains("weight_choices")) s.training.weight_choices = t.at("weight_choices").get<std::vector<double>>();
      if (t.contains("sac")) s.training.sac = masac::sac_from_json(t.at("sac"));
    }
    if (j.contains("decode_study")) s.decode = decode_study_from_json(j.at("decode_study"));
    if (j.contains("output_dir")) s.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("checkpoint")) s.checkpoint = base_dir / j.at("checkpoint").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment: ") + e.what());
  }
  s.validate();
  return s;
}

ExperimentSpec load_experiment(const std::filesystem::path& path) {
  return experiment_from_json(parse_file(path, "experiment file"), path.parent_path());
}

}  // namespace edgespec::harness
