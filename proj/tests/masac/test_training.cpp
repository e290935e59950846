#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "edgespec/baselines/baselines.hpp"
#include "edgespec/common/error.hpp"
#include "edgespec/masac/mec_env.hpp"
#include "edgespec/masac/train.hpp"
#include "edgespec/mec/scenario.hpp"
#include "support/mec_fixtures.hpp"

using namespace edgespec;
using namespace edgespec::masac;

namespace {

SacConfig bandit_config() {
  SacConfig c;
  c.hidden = {32, 32};
  c.alpha = 0.01;
  c.lr_actor = 1e-3;
  c.lr_critic = 1e-3;
  c.batch_size = 64;
  c.warmup_steps = 200;
  c.beta = 0.0;
  return c;
}

// Ordinary least squares slope of y on x with its 95% half-width.
std::pair<double, double> slope_ci(const std::vector<double>& y) {
  const double n = double(y.size());
  double mx = (n - 1) / 2, my = 0;
  for (double v : y) my += v / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sxx += (i - mx) * (i - mx);
    sxy += (i - mx) * (y[i] - my);
  }
  const double b = sxy / sxx;
  double sse = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - my - b * (i - mx);
    sse += r * r;
  }
  return {b, 1.96 * std::sqrt(sse / (n - 2) / sxx)};
}

std::shared_ptr<mec::ScenarioConfig> small_scenario() {
  auto cfg = std::make_shared<mec::ScenarioConfig>();
  cfg->devices = 4;
  cfg->servers = 2;
  cfg->slots = 5;
  cfg->kappa_s = 0.05;
  return cfg;
}

}  // namespace

TEST_CASE("bandit: trained policy pulls the better arm") {
  for (std::uint64_t seed = 1; seed <= 2; ++seed) {
    BanditEnvironment env;
    const auto r = train(env, bandit_config(), 5000, seed);
    double tail = 0;
    for (int k = 4500; k < 5000; ++k) tail += r.curve[k].mean_reward / 500;
    MESSAGE("seed " << seed << " final mean reward " << tail);
    CHECK(tail >= 0.95 * env.best_mean());
  }
}

TEST_CASE("zero learning rates leave the training curve flat") {
  BanditEnvironment env(0.5, 1.0, 0.1);
  SacConfig cfg = bandit_config();
  cfg.lr_actor = 0.0;
  cfg.lr_critic = 0.0;
  const auto r = train(env, cfg, 2000, 3);
  std::vector<double> y;
  for (const auto& row : r.curve) y.push_back(row.mean_reward);
  const auto [slope, half] = slope_ci(y);
  CHECK(std::abs(slope) <= half);
}

TEST_CASE("replay buffer is bounded, uniform and reproducible") {
  ReplayBuffer buf(50, 2, 1, 1);
  for (int k = 0; k < 120; ++k) {
    Transition t{Vector::Constant(2, k), Vector::Constant(1, k), Vector::Constant(1, 0.5), double(k),
                 Vector::Constant(2, k + 1), Vector::Constant(1, k + 1), false};
    buf.add(t);
    CHECK(buf.size() == std::min(k + 1, 50));
  }
  // The ring keeps the last 50 rewards.
  std::vector<int> all(50);
  for (int i = 0; i < 50; ++i) all[i] = i;
  const Batch b = buf.gather(all);
  CHECK(b.reward.minCoeff() == 70.0);
  CHECK(b.reward.maxCoeff() == 119.0);

  Rng r1(7), r2(7);
  CHECK(buf.sample_indices(32, r1) == buf.sample_indices(32, r2));

  Rng rng(8);
  std::vector<int> counts(50, 0);
  const int draws = 100000;
  for (int i : buf.sample_indices(draws, rng)) counts[i]++;
  const double p = 1.0 / 50, sigma = std::sqrt(draws * p * (1 - p));
  for (int c : counts) CHECK(std::abs(c - draws * p) <= 3.0 * sigma + 1.0);
}

TEST_CASE("divergence detector aborts with diagnostics") {
  BanditEnvironment env;
  SacConfig cfg = bandit_config();
  cfg.warmup_steps = 64;
  cfg.divergence_limit = 1e-12;
  try {
    train(env, cfg, 200, 4);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(std::string(e.what()).find("diverged") != std::string::npos);
  }
}

TEST_CASE("training is deterministic and checkpoints round trip") {
  auto cfg = small_scenario();
  SacConfig sac = bandit_config();
  sac.hidden = {16};
  sac.warmup_steps = 10;
  sac.batch_size = 8;
  sac.beta = 0.9;
  MecEnvironment env1(cfg), env2(cfg);
  const auto a = train(env1, sac, 6, 42);
  const auto b = train(env2, sac, 6, 42);
  std::ostringstream ca, cb;
  write_curve_csv(ca, a.curve);
  write_curve_csv(cb, b.curve);
  CHECK(ca.str() == cb.str());
  CHECK(ca.str().rfind("episode,mean_reward,critic_loss,policy_loss,entropy\n", 0) == 0);

  const auto dir = std::filesystem::temp_directory_path() / "edgespec_ckpt_test";
  std::filesystem::remove_all(dir);
  const nlohmann::json meta{{"scenario", mec::scenario_to_json(*cfg)}};
  save_checkpoint(dir / "model.json", a.model, meta);
  const Checkpoint c = load_checkpoint(dir / "model.json");
  CHECK(c.metadata == meta);
  CHECK(c.model.policies()[0].net.params() == a.model.policies()[0].net.params());
  CHECK(c.model.target_critics()[0].params() == a.model.target_critics()[0].params());

  // Same bytes on a second save.
  save_checkpoint(dir / "again.json", c.model, meta);
  std::ifstream f1(dir / "model.json"), f2(dir / "again.json");
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());

  // Tampered metadata fails the hash check.
  auto j = nlohmann::json::parse(s1.str());
  j["metadata"]["scenario"]["devices"] = 5;
  std::ofstream(dir / "bad.json") << j.dump();
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.json"), ConfigError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.json"), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("act returns feasible allocations for random parameters") {
  Rng rng(30);
  for (int trial = 0; trial < 1000; ++trial) {
    auto cfg = fixtures::random_config(rng, 8, 4);
    cfg->kappa_s = 0.05;
    const auto st = mec::make_initial_state(cfg, trial);
    const FeatureScaler scaler(*cfg, std::nullopt);
    const AgentDims d{cfg->servers, scaler.agent_obs_size(), scaler.state_size(), 2 * cfg->devices};
    SacConfig sac;
    sac.hidden = {8};
    Masac model(d, sac, rng);
    const auto alloc = act(st, model, scaler, cfg->w, rng, trial % 2 == 0);
    CHECK(mec::feasibility_check(alloc).empty());
    if (cfg->servers == 1) CHECK(alloc.x.col(0).sum() == cfg->devices);
  }
}

TEST_CASE("deterministic act on a fixed state repeats exactly") {
  auto cfg = small_scenario();
  const auto st = mec::make_initial_state(cfg, 3);
  const FeatureScaler scaler(*cfg, std::nullopt);
  Rng rng(31);
  Masac model({cfg->servers, scaler.agent_obs_size(), scaler.state_size(), 2 * cfg->devices}, SacConfig{}, rng);
  Rng a(1), b(2);
  const auto x = act(st, model, scaler, cfg->w, a, true);
  const auto y = act(st, model, scaler, cfg->w, b, true);
  CHECK(x.x == y.x);
  CHECK(x.y == y.y);
  CHECK(x.z == y.z);
}

TEST_CASE("observations are normalised and sized for the scenario") {
  auto cfg = small_scenario();
  MecEnvironment env(cfg, {20.0, 60.0, 100.0});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    env.reset(seed);
    for (int t = 0; t < cfg->slots; ++t) {
      const Observation o = env.observe();
      CHECK(o.agents.rows() == env.obs_size());
      CHECK(o.agents.cols() == cfg->servers);
      CHECK(o.state.size() == env.state_size());
      CHECK(o.agents.cwiseAbs().maxCoeff() <= 1.0);
      CHECK(o.state.cwiseAbs().maxCoeff() <= 1.0);
      const auto out = env.step(Matrix::Constant(env.action_size(), env.num_agents(), 0.5));
      CHECK(out.done == (t == cfg->slots - 1));
      CHECK(out.reward < 0.0);
      CHECK(env.last().reward == doctest::Approx(-env.last().report.value / env.last().baseline));
    }
  }
}

TEST_CASE("reward baseline depends only on the state") {
  auto cfg = small_scenario();
  const auto st = mec::make_initial_state(cfg, 9);
  CHECK(baseline_objective(st, 0.01, 20.0) == baseline_objective(st, 0.01, 20.0));
  Rng rng(hash_combine(stream_seed(st.seed, "baseline"), 0));
  const double expected = mec::objective(
      st, baselines::uniform_alloc(baselines::random_assoc(st, rng)), 0.01, 20.0);
  CHECK(baseline_objective(st, 0.01, 20.0) == expected);
}
