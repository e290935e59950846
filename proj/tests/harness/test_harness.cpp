#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "edgespec/common/error.hpp"
#include "edgespec/harness/csv.hpp"
#include "edgespec/harness/decode_study.hpp"
#include "edgespec/harness/experiment.hpp"
#include "edgespec/harness/report.hpp"
#include "edgespec/harness/stats.hpp"
#include "edgespec/harness/uara.hpp"
#include "edgespec/mec/model.hpp"
#include "edgespec/mec/scenario.hpp"

using namespace edgespec;
using namespace edgespec::harness;
using baselines::Policy;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.scenario.devices = 6;
  spec.scenario.servers = 2;
  spec.scenario.slots = 5;
  spec.scenario.kappa_s = 0.05;
  spec.scenario.flop_unit = 2e22;
  spec.scenario.bandwidth_unit_hz = 2.6e8;
  spec.seeds = {3, 4};
  spec.policies = {Policy::random, Policy::max_sinr, Policy::max_compute};
  spec.weights = {20.0, 100.0};
  return spec;
}

std::string slot_csv(const std::vector<SlotRow>& rows) {
  std::ostringstream out;
  write_slot_csv(out, rows);
  return out.str();
}

SlotRow synthetic(Policy p, std::uint64_t seed, int slot, double latency, double w = 20.0) {
  SlotRow r;
  r.run_id = baselines::to_string(p) + "-" + std::to_string(seed);
  r.seed = seed;
  r.slot = slot;
  r.policy = p;
  r.w = w;
  r.latency_s = latency;
  r.end_to_end_s = latency;
  r.objective = 10.0 * latency;
  r.energy_j = 0.01;
  return r;
}

}  // namespace

TEST_CASE("t critical values") {
  CHECK(t_critical_95(1) == doctest::Approx(12.706205));
  CHECK(t_critical_95(9) == doctest::Approx(2.262157));
  CHECK(t_critical_95(30) == doctest::Approx(2.042272));
  // Published values for larger df.
  CHECK(t_critical_95(40) == doctest::Approx(2.021075).epsilon(1e-4));
  CHECK(t_critical_95(120) == doctest::Approx(1.979930).epsilon(1e-4));
  CHECK_THROWS_AS(t_critical_95(0), ContractViolation);
}

TEST_CASE("summary statistics match hand computation") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const Summary s = summarize(v);
  CHECK(s.n == 4);
  CHECK(s.mean == 2.5);
  // sample variance 5/3
  CHECK(s.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(s.ci_half == doctest::Approx(3.182446 * std::sqrt(5.0 / 3.0) / 2.0));
  const std::vector<double> one{7.0};
  CHECK(summarize(one).ci_half == 0.0);
  CHECK(improvement(2.0, 1.5) == doctest::Approx(0.25));
  CHECK(improvement(2.0, 2.5) == doctest::Approx(-0.25));
}

TEST_CASE("number formatting round-trips and is canonical") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5}) CHECK(std::stod(format_number(v)) == v);
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(20.0) == "20");
}

TEST_CASE("csv reader rejects ragged rows") {
  std::istringstream ok("a,b\n1,2\n\n3,4\n");
  const auto t = read_csv(ok);
  CHECK(t.rows.size() == 2);
  CHECK(t.column("b") == 1);
  CHECK_THROWS_AS(t.column("c"), ConfigError);
  std::istringstream bad("a,b\n1,2,3\n");
  CHECK_THROWS_AS(read_csv(bad), ConfigError);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_csv(empty), ConfigError);
}

TEST_CASE("decode study: a single grid point gives one row per engine") {
  DecodeStudySpec spec;
  spec.gammas = {3};
  spec.rates_mbps = {10.0};
  spec.profiles = {{"chat", 40, 0.1}};
  spec.seeds = {5};
  const auto rows = run_decoding_study(spec);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].engine == Engine::conventional);
  CHECK(rows[1].engine == Engine::parallel);
  for (const auto& r : rows) {
    CHECK(r.latency.tokens_out == 40);
    CHECK(r.tokens_per_s() == doctest::Approx(40.0 / r.latency.total_s));
    CHECK(r.idle_fraction() >= 0.0);
    CHECK(r.idle_fraction() <= 1.0);
  }
}

TEST_CASE("decode study: parallel latency is non-increasing in uplink rate") {
  DecodeStudySpec spec;
  spec.gammas = {2, 4, 6};
  spec.seeds = {1, 2, 3};
  const auto rows = run_decoding_study(spec);
  int checked = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.engine != Engine::parallel) continue;
    for (std::size_t k = i + 1; k < rows.size(); ++k) {
      const auto& q = rows[k];
      if (q.engine != r.engine || q.profile != r.profile || q.seed != r.seed || q.gamma != r.gamma) continue;
      if (q.rate_mbps <= r.rate_mbps) continue;
      CHECK(q.latency.total_s <= r.latency.total_s + 1e-12);
      ++checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("decode study rows match a direct engine run") {
  DecodeStudySpec spec;
  spec.gammas = {4};
  spec.rates_mbps = {50.0};
  spec.profiles = {{"summarize", 64, 0.1}};
  spec.seeds = {9};
  const auto rows = run_decoding_study(spec);
  const specdec::SyntheticLM target(9, spec.vocab_size, 0.0, spec.sharpness);
  specdec::DecodeConfig cfg;
  cfg.gamma = 4;
  cfg.max_tokens = 64;
  cfg.bits_per_token = spec.bits_per_token;
  specdec::LinkTiming timing;
  timing.device_flops = spec.device_flops;
  timing.server_flops_effective = spec.server_flops;
  timing.uplink_rate = 50e6;
  Rng rng = make_stream(9, "verify");
  const auto direct = specdec::run_parallel(target.with_smoothing(0.1), target, cfg, timing, rng);
  CHECK(std::abs(rows[1].latency.total_s - direct.latency.total_s) <= 1e-9 * direct.latency.total_s);
}

TEST_CASE("decode study rejects invalid grids") {
  DecodeStudySpec spec;
  spec.gammas = {0};
  CHECK_THROWS_AS(run_decoding_study(spec), ConfigError);
  spec = DecodeStudySpec{};
  spec.rates_mbps = {};
  CHECK_THROWS_AS(run_decoding_study(spec), ConfigError);
  CHECK_THROWS_AS(decode_study_from_json(nlohmann::json{{"gamma", {1}}}), ConfigError);
  CHECK_THROWS_AS(decode_study_from_json(nlohmann::json{{"mode", "beam"}}), ConfigError);
  CHECK_THROWS_AS(decode_study_from_json(nlohmann::json{{"profiles", {{{"name", "a"}, {"smoothing", 2.0}}}}}),
                  ConfigError);
}

TEST_CASE("csv headers are stable") {
  std::ostringstream d;
  write_decode_csv(d, {});
  CHECK(d.str() ==
        "schema_version,run_id,seed,engine,profile,gamma,rate_mbps,tokens,rounds,latency_s,mobile_compute_s,"
        "uplink_s,server_compute_s,device_idle_s,server_idle_s,tokens_per_s,idle_fraction\n");
  CHECK(slot_csv({}) ==
        "schema_version,run_id,seed,slot,policy,w,latency_s,end_to_end_s,objective,energy_j,energy_high_j,"
        "energy_low_j,devices_high,devices_low,tokens_per_s\n");
  std::ostringstream c;
  masac::write_curve_csv(c, {});
  CHECK(c.str() == "episode,mean_reward,critic_loss,policy_loss,entropy\n");
}

TEST_CASE("every emitted row has the header's shape") {
  ExperimentSpec spec = small_spec();
  const auto csv = slot_csv(run_uara_eval(spec, nullptr));
  std::istringstream in(csv);
  const auto table = read_csv(in);
  CHECK(table.rows.size() == 3 * 2 * 5);
  for (const auto& row : table.rows) CHECK(row[0] == "1");
}

TEST_CASE("one policy, one seed, one slot gives one row") {
  ExperimentSpec spec = small_spec();
  spec.scenario.slots = 1;
  spec.seeds = {11};
  spec.policies = {Policy::max_sinr};
  const auto rows = run_uara_eval(spec, nullptr);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].slot == 0);
  CHECK(rows[0].w == spec.scenario.w);
}

TEST_CASE("evaluation is byte-identical across invocations") {
  ExperimentSpec spec = small_spec();
  CHECK(slot_csv(run_uara_eval(spec, nullptr)) == slot_csv(run_uara_eval(spec, nullptr)));
  CHECK(slot_csv(run_energy_sweep(spec, nullptr)) == slot_csv(run_energy_sweep(spec, nullptr)));
  std::ostringstream a, b;
  write_decode_csv(a, run_decoding_study(spec.decode));
  write_decode_csv(b, run_decoding_study(spec.decode));
  CHECK(a.str() == b.str());
}

TEST_CASE("tma_masac without a checkpoint is an error") {
  ExperimentSpec spec = small_spec();
  spec.policies = {Policy::tma_masac};
  CHECK_THROWS_AS(run_uara_eval(spec, nullptr), ConfigError);
  CHECK_THROWS_AS(load_trained_policy("/nonexistent/checkpoint.json", spec.scenario), ConfigError);
}

TEST_CASE("emitted metrics equal a recomputation from the logged rollout") {
  ExperimentSpec spec = small_spec();
  spec.seeds = {21};
  spec.policies = {Policy::max_compute};
  const auto rows = run_uara_eval(spec, nullptr);
  auto cfg = std::make_shared<const mec::ScenarioConfig>(spec.scenario);
  mec::EnvState st = mec::make_initial_state(cfg, 21);
  Rng env = make_stream(21, "env");
  for (const auto& row : rows) {
    const auto alloc = baselines::uniform_alloc(baselines::max_compute_assoc(st));
    const auto rep = mec::evaluate(st, alloc, cfg->lambda, row.w);
    double lat = 0.0, energy = 0.0, low = 0.0, high = 0.0;
    for (int i = 0; i < st.num_devices(); ++i) {
      lat += rep.devices[i].local_s + rep.devices[i].remote_s;
      const double e = rep.devices[i].energy.compute + rep.devices[i].energy.communication;
      energy += e;
      if (st.devices[i].battery <= 0.2) low += e;
      if (st.devices[i].battery >= 0.8) high += e;
      st.last_energy_j[i] = e;
    }
    lat /= st.num_devices();
    CHECK(std::abs(row.latency_s - lat) <= 1e-9 * lat);
    CHECK(std::abs(row.objective - rep.value) <= 1e-9 * rep.value);
    CHECK(std::abs(row.energy_j - energy) <= 1e-9 * energy);
    CHECK(std::abs(row.energy_low_j - low) <= 1e-9 * std::max(low, 1e-300));
    CHECK(std::abs(row.energy_high_j - high) <= 1e-9 * std::max(high, 1e-300));
    if (row.slot + 1 < cfg->slots) st = mec::step_env(st, env);
  }
}

TEST_CASE("slot rows survive a csv round trip") {
  ExperimentSpec spec = small_spec();
  const auto rows = run_energy_sweep(spec, nullptr);
  std::istringstream in(slot_csv(rows));
  const auto back = slot_rows_from_csv(read_csv(in));
  REQUIRE(back.size() == rows.size());
  CHECK(slot_csv(back) == slot_csv(rows));
}

TEST_CASE("run and policy summaries reproduce hand-computed means") {
  std::vector<SlotRow> rows{synthetic(Policy::random, 1, 0, 1.0), synthetic(Policy::random, 1, 1, 3.0),
                            synthetic(Policy::random, 2, 0, 4.0), synthetic(Policy::random, 2, 1, 4.0),
                            synthetic(Policy::tma_masac, 1, 0, 1.0), synthetic(Policy::tma_masac, 1, 1, 1.0),
                            synthetic(Policy::tma_masac, 2, 0, 2.0), synthetic(Policy::tma_masac, 2, 1, 2.0)};
  const auto runs = summarize_runs(rows);
  REQUIRE(runs.size() == 4);
  CHECK(runs[0].latency_s == 2.0);
  CHECK(runs[1].latency_s == 4.0);
  const auto pol = summarize_policies(runs);
  REQUIRE(pol.size() == 2);
  CHECK(pol[0].latency.mean == 3.0);
  CHECK(pol[1].latency.mean == 1.5);
  // two seeds: half-width = 12.706205 * sd / sqrt(2), sd = sqrt(2)
  CHECK(pol[0].latency.ci_half == doctest::Approx(12.706205));
  const auto* best = best_baseline(pol, 20.0);
  REQUIRE(best != nullptr);
  CHECK(best->policy == Policy::random);
  const auto text = render_report(rows, {});
  CHECK(text.find("| random | 2 | 3.0000 ± 12.7062 |") != std::string::npos);
  CHECK(text.find("| tma_masac | 2 | 1.5000 ± 6.3531 |") != std::string::npos);
  // (3 - 1.5) / 3
  CHECK(text.find("+50.0%") != std::string::npos);
}

TEST_CASE("report with one row and with no rows") {
  const auto text = render_report({synthetic(Policy::max_sinr, 4, 0, 0.75)}, {});
  CHECK(text.find("| max_sinr | 1 | 0.7500 ± 0.0000 |") != std::string::npos);
  CHECK(text.find("+0.0%") != std::string::npos);
  CHECK_THROWS_AS(render_report({}, {}), ConfigError);
  CHECK_THROWS_AS(report_from_files({}), ConfigError);
}

TEST_CASE("report tier table tracks relative change across w") {
  std::vector<SlotRow> rows;
  for (double w : {20.0, 100.0}) {
    SlotRow r = synthetic(Policy::max_sinr, 1, 0, 1.0, w);
    r.energy_high_j = w == 20.0 ? 0.010 : 0.009;
    r.energy_low_j = w == 20.0 ? 0.010 : 0.005;
    rows.push_back(r);
  }
  const auto text = render_report(rows, {});
  CHECK(text.find("## Energy by battery tier") != std::string::npos);
  CHECK(text.find("| -10.0% | -50.0% |") != std::string::npos);
}

TEST_CASE("report reads both table kinds from disk") {
  const auto dir = std::filesystem::temp_directory_path() / "edgespec_report_test";
  std::filesystem::create_directories(dir);
  ExperimentSpec spec = small_spec();
  spec.decode.gammas = {2};
  spec.decode.seeds = {1};
  {
    std::ofstream a(dir / "eval.csv");
    write_slot_csv(a, run_uara_eval(spec, nullptr));
    std::ofstream b(dir / "decode.csv");
    write_decode_csv(b, run_decoding_study(spec.decode));
    std::ofstream c(dir / "junk.csv");
    c << "x,y\n1,2\n";
  }
  const auto text = report_from_files({dir / "eval.csv", dir / "decode.csv"});
  CHECK(text.find("## Policies at w = 20") != std::string::npos);
  CHECK(text.find("## Decoding study") != std::string::npos);
  CHECK_THROWS_AS(report_from_files({dir / "junk.csv"}), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("experiment files resolve scenarios and reject unknown keys") {
  const auto dir = std::filesystem::temp_directory_path() / "edgespec_experiment_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream s(dir / "scn.json");
    s << R"({"devices": 4, "servers": 2, "slots": 3})";
    std::ofstream e(dir / "exp.json");
    e << R"({"scenario": "scn.json", "seeds": [5], "policies": ["max_sinr"],
             "training": {"episodes": 2, "sac": {"hidden": [8]}}})";
    std::ofstream bad(dir / "bad.json");
    bad << R"({"scenario": "scn.json", "seed": 5})";
    std::ofstream pol(dir / "pol.json");
    pol << R"({"scenario": "scn.json", "policies": ["greedy"]})";
  }
  const auto spec = load_experiment(dir / "exp.json");
  CHECK(spec.scenario.devices == 4);
  CHECK(spec.seeds == std::vector<std::uint64_t>{5});
  CHECK(spec.policies == std::vector<Policy>{Policy::max_sinr});
  CHECK(spec.training.sac.hidden == std::vector<int>{8});
  CHECK_THROWS_AS(load_experiment(dir / "bad.json"), ConfigError);
  CHECK_THROWS_AS(load_experiment(dir / "pol.json"), ConfigError);
  CHECK_THROWS_AS(load_experiment(dir / "missing.json"), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("trained policies round-trip through a checkpoint") {
  ExperimentSpec spec = small_spec();
  spec.scenario.slots = 4;
  spec.training.episodes = 3;
  spec.training.weight_choices = {20.0, 100.0};
  spec.training.sac.hidden = {16};
  spec.training.sac.warmup_steps = 4;
  spec.training.sac.batch_size = 4;
  const auto result = train_tma_masac(spec, 5);
  CHECK(result.curve.size() == 3);
  const auto path = std::filesystem::temp_directory_path() / "edgespec_ckpt_test.json";
  masac::save_checkpoint(path, result.model, checkpoint_metadata(spec));
  const auto trained = load_trained_policy(path, spec.scenario);
  spec.policies = {Policy::tma_masac};
  const auto rows = run_energy_sweep(spec, &trained);
  CHECK(rows.size() == 2 * 2 * 4);
  CHECK(slot_csv(rows) == slot_csv(run_energy_sweep(spec, &trained)));

  ExperimentSpec other = spec;
  other.scenario.devices = 7;
  CHECK_THROWS_AS(load_trained_policy(path, other.scenario), ConfigError);
  std::filesystem::remove(path);
}
