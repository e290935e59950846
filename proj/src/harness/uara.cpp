#include "edgespec/harness/uara.hpp"

#include <algorithm>
#include <map>
#include <ostream>

#include "edgespec/common/error.hpp"
#include "edgespec/mec/model.hpp"
#include "edgespec/mec/scenario.hpp"

namespace edgespec::harness {

using baselines::Policy;
using nlohmann::json;

nlohmann::json checkpoint_metadata(const ExperimentSpec& spec) {
  return {{"kind", "tma_masac"},
          {"scenario", mec::scenario_to_json(spec.scenario)},
          {"weight_choices", spec.training.weight_choices},
          {"training_seed", spec.training.seed},
          {"episodes", spec.training.episodes}};
}

TrainedPolicy load_trained_policy(const std::filesystem::path& path, const mec::ScenarioConfig& scenario) {
  if (!std::filesystem::exists(path)) throw ConfigError("checkpoint not found: " + path.string());
  auto ckpt = masac::load_checkpoint(path);
  std::vector<double> choices;
  if (ckpt.metadata.contains("weight_choices")) {
    try {
      choices = ckpt.metadata.at("weight_choices").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw ConfigError("checkpoint " + path.string() + ": bad weight_choices: " + e.what());
    }
  }
  auto config = std::make_shared<const mec::ScenarioConfig>(scenario);
  masac::FeatureScaler scaler(*config, masac::weight_range(choices));
  const auto& d = ckpt.model.dims();
  if (d.agents != scenario.servers || d.action != 2 * scenario.devices || d.obs != scaler.agent_obs_size() ||
      d.state != scaler.state_size()) {
    throw ConfigError("checkpoint " + path.string() + " was trained for " + std::to_string(d.action / 2) +
                      " devices and " + std::to_string(d.agents) + " servers; scenario has " +
                      std::to_string(scenario.devices) + " and " + std::to_string(scenario.servers));
  }
  return TrainedPolicy{config, std::move(ckpt.model), scaler};
}

masac::TrainResult train_tma_masac(const ExperimentSpec& spec, std::uint64_t seed,
                                   const std::function<void(const masac::CurveRow&)>& on_episode) {
  masac::MecEnvironment env(std::make_shared<const mec::ScenarioConfig>(spec.scenario), spec.training.weight_choices);
  return masac::train(env, spec.training.sac, spec.training.episodes, seed, on_episode);
}

namespace {

std::string run_id(Policy policy, std::uint64_t seed, double w) {
  return baselines::to_string(policy) + "-w" + format_number(w) + "-s" + std::to_string(seed);
}

mec::Allocation choose(Policy policy, const mec::EnvState& st, double w, const TrainedPolicy* trained, Rng& rng) {
  switch (policy) {
    case Policy::random:
      return baselines::uniform_alloc(baselines::random_assoc(st, rng));
    case Policy::max_sinr:
      return baselines::uniform_alloc(baselines::max_sinr_assoc(st));
    case Policy::max_compute:
      return baselines::uniform_alloc(baselines::max_compute_assoc(st));
    case Policy::tma_masac:
      return masac::act(st, trained->model, trained->scaler, w, rng, true);
  }
  throw ContractViolation("unknown policy");
}

}  // namespace

std::vector<SlotRow> run_policy(const ExperimentSpec& spec, Policy policy, std::uint64_t seed, double w,
                                const TrainedPolicy* trained) {
  if (policy == Policy::tma_masac && trained == nullptr) {
    throw ConfigError("policy tma_masac needs a trained checkpoint");
  }
  auto config = std::make_shared<const mec::ScenarioConfig>(spec.scenario);
  mec::EnvState st = mec::make_initial_state(config, seed);
  Rng env_rng = make_stream(seed, "env");
  Rng policy_rng = make_stream(seed, "policy");
  const double lambda = config->lambda;
  const std::string id = run_id(policy, seed, w);
  std::vector<SlotRow> rows;
  for (int t = 0; t < config->slots; ++t) {
    const mec::Allocation alloc = choose(policy, st, w, trained, policy_rng);
    const auto report = mec::evaluate(st, alloc, lambda, w);
    SlotRow row;
    row.run_id = id;
    row.seed = seed;
    row.slot = st.slot;
    row.policy = policy;
    row.w = w;
    row.latency_s = report.mean_raw_latency_s();
    row.end_to_end_s = report.mean_end_to_end_s();
    row.objective = report.value;
    double tokens = 0.0;
    double busy = 0.0;
    for (int i = 0; i < st.num_devices(); ++i) {
      const auto& d = report.devices[i];
      const double e = d.energy.total();
      row.energy_j += e;
      if (st.devices[i].battery >= kHighBattery) {
        row.energy_high_j += e;
        ++row.devices_high;
      }
      if (st.devices[i].battery <= kLowBattery) {
        row.energy_low_j += e;
        ++row.devices_low;
      }
      tokens += st.tasks[i].tokens;
      busy += d.raw_latency_s();
      st.last_energy_j[i] = e;
    }
    row.tokens_per_s = busy > 0.0 ? tokens / busy : 0.0;
    rows.push_back(row);
    if (t + 1 < config->slots) st = mec::step_env(st, env_rng);
  }
  return rows;
}

std::vector<SlotRow> run_uara_eval(const ExperimentSpec& spec, const TrainedPolicy* trained) {
  std::vector<SlotRow> rows;
  for (Policy p : spec.policies) {
    for (auto seed : spec.seeds) {
      auto run = run_policy(spec, p, seed, spec.scenario.w, trained);
      rows.insert(rows.end(), run.begin(), run.end());
    }
  }
  return rows;
}

std::vector<SlotRow> run_energy_sweep(const ExperimentSpec& spec, const TrainedPolicy* trained) {
  std::vector<SlotRow> rows;
  for (double w : spec.weights) {
    for (Policy p : spec.policies) {
      for (auto seed : spec.seeds) {
        auto run = run_policy(spec, p, seed, w, trained);
        rows.insert(rows.end(), run.begin(), run.end());
      }
    }
  }
  return rows;
}

std::vector<std::string> slot_csv_header() {
  return {"schema_version", "run_id",        "seed",          "slot",         "policy",
          "w",              "latency_s",     "end_to_end_s",  "objective",    "energy_j",
          "energy_high_j",  "energy_low_j",  "devices_high",  "devices_low",  "tokens_per_s"};
}

void write_slot_csv(std::ostream& out, const std::vector<SlotRow>& rows) {
  write_csv_line(out, slot_csv_header());
  for (const auto& r : rows) {
    write_csv_line(out, {std::to_string(kSchemaVersion), r.run_id, std::to_string(r.seed), std::to_string(r.slot),
                         baselines::to_string(r.policy), format_number(r.w), format_number(r.latency_s),
                         format_number(r.end_to_end_s), format_number(r.objective), format_number(r.energy_j),
                         format_number(r.energy_high_j), format_number(r.energy_low_j),
                         std::to_string(r.devices_high), std::to_string(r.devices_low),
                         format_number(r.tokens_per_s)});
  }
}

namespace {

double num(const std::string& s, const std::string& column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("csv: column " + column + " holds non-numeric '" + s + "'");
  }
}

}  // namespace

std::vector<SlotRow> slot_rows_from_csv(const CsvTable& table) {
  const auto header = slot_csv_header();
  if (table.header != header) throw ConfigError("csv: not a slot metrics table (header mismatch)");
  std::vector<SlotRow> rows;
  for (const auto& f : table.rows) {
    if (f[0] != std::to_string(kSchemaVersion)) throw ConfigError("csv: unsupported schema version " + f[0]);
    SlotRow r;
    r.run_id = f[1];
    r.seed = static_cast<std::uint64_t>(num(f[2], header[2]));
    r.slot = static_cast<int>(num(f[3], header[3]));
    r.policy = baselines::policy_from_string(f[4]);
    r.w = num(f[5], header[5]);
    r.latency_s = num(f[6], header[6]);
    r.end_to_end_s = num(f[7], header[7]);
    r.objective = num(f[8], header[8]);
    r.energy_j = num(f[9], header[9]);
    r.energy_high_j = num(f[10], header[10]);
    r.energy_low_j = num(f[11], header[11]);
    r.devices_high = static_cast<int>(num(f[12], header[12]));
    r.devices_low = static_cast<int>(num(f[13], header[13]));
    r.tokens_per_s = num(f[14], header[14]);
    rows.push_back(r);
  }
  return rows;
}

std::vector<RunSummary> summarize_runs(const std::vector<SlotRow>& rows) {
  std::vector<double> ws;
  std::vector<Policy> policies;
  for (const auto& r : rows) {
    if (std::find(ws.begin(), ws.end(), r.w) == ws.end()) ws.push_back(r.w);
    if (std::find(policies.begin(), policies.end(), r.policy) == policies.end()) policies.push_back(r.policy);
  }
  std::vector<RunSummary> out;
  for (double w : ws) {
    for (Policy p : policies) {
      std::map<std::uint64_t, RunSummary> by_seed;
      for (const auto& r : rows) {
        if (r.w != w || r.policy != p) continue;
        auto& s = by_seed[r.seed];
        s.policy = p;
        s.w = w;
        s.seed = r.seed;
        ++s.slots;
        s.latency_s += r.latency_s;
        s.end_to_end_s += r.end_to_end_s;
        s.objective += r.objective;
        s.energy_j += r.energy_j;
        s.energy_high_j += r.energy_high_j;
        s.energy_low_j += r.energy_low_j;
      }
      for (auto& [seed, s] : by_seed) {
        const double n = s.slots;
        s.latency_s /= n;
        s.end_to_end_s /= n;
        s.objective /= n;
        s.energy_j /= n;
        s.energy_high_j /= n;
        s.energy_low_j /= n;
        out.push_back(s);
      }
    }
  }
  return out;
}

std::vector<PolicySummary> summarize_policies(const std::vector<RunSummary>& runs) {
  std::vector<PolicySummary> out;
  std::vector<std::pair<double, Policy>> keys;
  for (const auto& r : runs) {
    const std::pair<double, Policy> key{r.w, r.policy};
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  for (const auto& [w, p] : keys) {
    std::vector<double> lat, e2e, obj, energy;
    double high = 0.0;
    double low = 0.0;
    for (const auto& r : runs) {
      if (r.w != w || r.policy != p) continue;
      lat.push_back(r.latency_s);
      e2e.push_back(r.end_to_end_s);
      obj.push_back(r.objective);
      energy.push_back(r.energy_j);
      high += r.energy_high_j;
      low += r.energy_low_j;
    }
    PolicySummary s;
    s.policy = p;
    s.w = w;
    s.latency = summarize(lat);
    s.end_to_end = summarize(e2e);
    s.objective = summarize(obj);
    s.energy = summarize(energy);
    s.energy_high_j = high / lat.size();
    s.energy_low_j = low / lat.size();
    out.push_back(s);
  }
  return out;
}

}  // namespace edgespec::harness
