// Command-line front end: decode-study, train, eval, sweep-w, report.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 contract
// violation, 4 training divergence, 1 anything else. Failures print one JSON
// object on stderr.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "edgespec/common/error.hpp"
#include "edgespec/harness/decode_study.hpp"
#include "edgespec/harness/experiment.hpp"
#include "edgespec/harness/report.hpp"
#include "edgespec/harness/uara.hpp"
#include "edgespec/masac/train.hpp"
#include "edgespec/mec/model.hpp"

namespace fs = std::filesystem;
using namespace edgespec;
using namespace edgespec::harness;

namespace {

constexpr const char* kOutputEnv = "EDGESPEC_OUTPUT_DIR";

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string policy;
  std::string checkpoint;
  std::vector<std::string> inputs;
};

// --out wins over the environment, which wins over the experiment file.
fs::path output_dir(const Options& opt, const std::string& from_spec) {
  if (!opt.out.empty()) return opt.out;
  if (const char* env = std::getenv(kOutputEnv); env != nullptr && *env != '\0') return env;
  return from_spec;
}

fs::path prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

ExperimentSpec load_spec(const Options& opt) {
  if (opt.config.empty()) throw ConfigError("--config is required");
  ExperimentSpec spec = load_experiment(opt.config);
  if (opt.seed) spec.seeds = {*opt.seed};
  if (!opt.policy.empty()) spec.policies = {baselines::policy_from_string(opt.policy)};
  return spec;
}

std::optional<TrainedPolicy> trained_if_needed(const ExperimentSpec& spec, const Options& opt, const fs::path& out) {
  bool needed = false;
  for (auto p : spec.policies) needed = needed || p == baselines::Policy::tma_masac;
  if (!needed) return std::nullopt;
  fs::path path = out / "checkpoint.json";
  if (!opt.checkpoint.empty()) {
    path = opt.checkpoint;
  } else if (spec.checkpoint) {
    path = *spec.checkpoint;
  }
  return load_trained_policy(path, spec.scenario);
}

void print_summaries(const std::vector<SlotRow>& rows) {
  for (const auto& s : summarize_policies(summarize_runs(rows))) {
    std::cout << baselines::to_string(s.policy) << " w=" << format_number(s.w) << " latency "
              << format_number(s.latency.mean) << " +- " << format_number(s.latency.ci_half) << " s, energy "
              << format_number(s.energy.mean) << " J/slot\n";
  }
}

int cmd_decode_study(const Options& opt) {
  if (!opt.policy.empty() || !opt.checkpoint.empty()) {
    throw ConfigError("decode-study takes neither --policy nor --checkpoint");
  }
  ExperimentSpec spec = load_experiment(opt.config);
  if (opt.seed) spec.decode.seeds = {*opt.seed};
  const fs::path dir = prepare_dir(output_dir(opt, spec.output_dir));
  const auto rows = run_decoding_study(spec.decode);
  auto out = open_out(dir / "decode_study.csv");
  write_decode_csv(out, rows);
  std::cout << "wrote " << rows.size() << " rows to " << (dir / "decode_study.csv").string() << "\n";
  return 0;
}

int cmd_train(const Options& opt) {
  if (!opt.policy.empty() && opt.policy != "tma_masac") throw ConfigError("train only supports --policy tma_masac");
  Options o = opt;
  o.policy.clear();
  ExperimentSpec spec = load_spec(o);
  const std::uint64_t seed = opt.seed.value_or(spec.training.seed);
  spec.training.seed = seed;
  const fs::path dir = prepare_dir(output_dir(opt, spec.output_dir));
  const fs::path ckpt = opt.checkpoint.empty() ? dir / "checkpoint.json" : fs::path(opt.checkpoint);
  if (ckpt.has_parent_path()) prepare_dir(ckpt.parent_path());
  const int every = std::max(1, spec.training.episodes / 10);
  const auto result = train_tma_masac(spec, seed, [&](const masac::CurveRow& r) {
    if ((r.episode + 1) % every == 0) {
      std::cout << "episode " << r.episode + 1 << "/" << spec.training.episodes << " mean reward "
                << format_number(r.mean_reward) << "\n" << std::flush;
    }
  });
  masac::save_checkpoint(ckpt, result.model, checkpoint_metadata(spec));
  auto out = open_out(dir / "training_curve.csv");
  masac::write_curve_csv(out, result.curve);
  std::cout << "wrote " << ckpt.string() << " and " << (dir / "training_curve.csv").string() << "\n";
  return 0;
}

int cmd_eval(const Options& opt, bool sweep) {
  const ExperimentSpec spec = load_spec(opt);
  const fs::path dir = prepare_dir(output_dir(opt, spec.output_dir));
  const auto trained = trained_if_needed(spec, opt, dir);
  const TrainedPolicy* model = trained ? &*trained : nullptr;
  const auto rows = sweep ? run_energy_sweep(spec, model) : run_uara_eval(spec, model);
  const fs::path file = dir / (sweep ? "sweep_w.csv" : "eval.csv");
  auto out = open_out(file);
  write_slot_csv(out, rows);
  print_summaries(rows);
  std::cout << "wrote " << rows.size() << " rows to " << file.string() << "\n";
  return 0;
}

int cmd_report(const Options& opt) {
  std::string from_spec = "out";
  if (!opt.config.empty()) from_spec = load_experiment(opt.config).output_dir;
  const fs::path dir = output_dir(opt, from_spec);
  std::vector<fs::path> files(opt.inputs.begin(), opt.inputs.end());
  if (files.empty()) {
    for (const char* name : {"eval.csv", "sweep_w.csv", "decode_study.csv"}) {
      if (fs::exists(dir / name)) files.push_back(dir / name);
    }
  }
  const std::string text = report_from_files(files);
  prepare_dir(dir);
  auto out = open_out(dir / "report.md");
  out << text;
  std::cout << text;
  return 0;
}

int fail(const std::string& command, const char* type, const std::string& message, int code) {
  nlohmann::json err = {{"error", {{"type", type}, {"command", command}, {"message", message}}}};
  std::cerr << err.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speculative decoding and edge-offloading experiments"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("-c,--config", opt.config, "Experiment JSON file");
    if (needs_config) c->required();
    sub->add_option("-o,--out", opt.out, "Output directory (overrides $EDGESPEC_OUTPUT_DIR and the file)");
  };
  auto* decode = app.add_subcommand("decode-study", "Sweep draft length and uplink rate for both decoding engines");
  add_common(decode, true);
  decode->add_option("-s,--seed", opt.seed, "Run a single seed");
  decode->add_option("-p,--policy", opt.policy, "Not used");
  decode->add_option("--checkpoint", opt.checkpoint, "Not used");

  auto* train = app.add_subcommand("train", "Train TMA-MASAC and write a checkpoint");
  add_common(train, true);
  train->add_option("-s,--seed", opt.seed, "Training seed");
  train->add_option("-p,--policy", opt.policy, "Must be tma_masac if given");
  train->add_option("--checkpoint", opt.checkpoint, "Checkpoint to write (default <out>/checkpoint.json)");

  auto* eval = app.add_subcommand("eval", "Roll every policy over every seed at the scenario's w");
  auto* sweep = app.add_subcommand("sweep-w", "Roll every policy over every seed for each energy weight");
  for (auto* sub : {eval, sweep}) {
    add_common(sub, true);
    sub->add_option("-s,--seed", opt.seed, "Run a single seed");
    sub->add_option("-p,--policy", opt.policy, "Run a single policy");
    sub->add_option("--checkpoint", opt.checkpoint, "Checkpoint for tma_masac (default <out>/checkpoint.json)");
  }

  auto* report = app.add_subcommand("report", "Summarise metrics CSVs as markdown");
  add_common(report, false);
  report->add_option("inputs", opt.inputs, "CSV files (default: the known outputs in the output directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("", "usage_error", e.what(), 2);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "decode-study") return cmd_decode_study(opt);
    if (command == "train") return cmd_train(opt);
    if (command == "eval") return cmd_eval(opt, false);
    if (command == "sweep-w") return cmd_eval(opt, true);
    return cmd_report(opt);
  } catch (const ConfigError& e) {
    return fail(command, "config_error", e.what(), 2);
  } catch (const mec::InfeasibleAllocation& e) {
    return fail(command, "contract_violation", e.what(), 3);
  } catch (const ContractViolation& e) {
    return fail(command, "contract_violation", e.what(), 3);
  } catch (const masac::TrainingError& e) {
    return fail(command, "training_error", e.what(), 4);
  } catch (const std::exception& e) {
    return fail(command, "internal_error", e.what(), 1);
  }
}
