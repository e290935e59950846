#include <array>
#include <cmath>

#include "doctest.h"
#include "edgespec/common/error.hpp"
#include "support/mec_fixtures.hpp"

using namespace edgespec::mec;
using nlohmann::json;

TEST_CASE("scenario json round trip") {
  ScenarioConfig cfg;
  cfg.devices = 7;
  cfg.server_positions = {{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}};
  cfg.snr_mode = SnrMode::psd_literal;
  cfg.log_base = LogBase::natural;
  cfg.flop_unit = 1e18;
  const ScenarioConfig back = scenario_from_json(scenario_to_json(cfg));
  CHECK(scenario_to_json(back) == scenario_to_json(cfg));
  CHECK(back.devices == 7);
  CHECK(back.server_positions[2].y == 6.0);
  CHECK(back.snr_mode == SnrMode::psd_literal);
}

TEST_CASE("scenario parsing rejects bad input") {
  CHECK_THROWS_AS(scenario_from_json(json{{"devcies", 3}}), edgespec::ConfigError);
  CHECK_THROWS_AS(scenario_from_json(json{{"devices", 0}}), edgespec::ConfigError);
  CHECK_THROWS_AS(scenario_from_json(json{{"snr_mode", "loud"}}), edgespec::ConfigError);
  CHECK_THROWS_AS(scenario_from_json(json{{"path_loss", {{"pl0", 3}}}}), edgespec::ConfigError);
  CHECK_THROWS_AS(scenario_from_json(json{{"devices", "twelve"}}), edgespec::ConfigError);
  CHECK_THROWS_AS(scenario_from_json(json{{"tasks", {{"expected_tokens", {{"poetry", 10}}}}}}),
                  edgespec::ConfigError);
  CHECK_THROWS_AS(scenario_from_json(json{{"servers", 2}, {"server_positions", {{0, 0}}}}),
                  edgespec::ConfigError);
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), edgespec::ConfigError);
}

TEST_CASE("initial state honours the config") {
  auto cfg = std::make_shared<ScenarioConfig>();
  const EnvState st = make_initial_state(cfg, 11);
  CHECK(st.num_devices() == 12);
  CHECK(st.num_servers() == 3);
  for (const auto& s : st.servers) {
    CHECK(s.bandwidth_hz == doctest::Approx(10e6 / 3));
    CHECK(s.slot_seconds == cfg->kappa());
  }
  for (const auto& d : st.devices) {
    CHECK(d.tx_power_w >= dbm_to_watts(16.0));
    CHECK(d.tx_power_w <= dbm_to_watts(24.0));
    CHECK(d.battery > 0.0);
    CHECK(d.battery <= 1.0);
    CHECK(d.position.x >= 0.0);
    CHECK(d.position.x <= cfg->area_m);
  }
  CHECK((st.channel.h.array() >= 0.0).all());
  CHECK(st.servers[0].flops < st.servers[2].flops);
}

TEST_CASE("same seed gives the same trajectory") {
  auto cfg = std::make_shared<ScenarioConfig>();
  EnvState a = make_initial_state(cfg, 5);
  EnvState b = make_initial_state(cfg, 5);
  edgespec::Rng ra(1), rb(1);
  for (int t = 0; t < 10; ++t) {
    CHECK(a.channel.h == b.channel.h);
    for (int i = 0; i < a.num_devices(); ++i) {
      CHECK(a.tasks[i].tokens == b.tasks[i].tokens);
      CHECK(a.devices[i].position.x == b.devices[i].position.x);
    }
    a = step_env(a, ra);
    b = step_env(b, rb);
  }
  const EnvState c = make_initial_state(cfg, 6);
  CHECK(c.channel.h != make_initial_state(cfg, 5).channel.h);
}

TEST_CASE("static devices without fading keep their channel") {
  auto cfg = std::make_shared<ScenarioConfig>();
  cfg->speed_min_mps = cfg->speed_max_mps = 0.0;
  cfg->path_loss.fading = false;
  EnvState st = make_initial_state(cfg, 3);
  edgespec::Rng rng(4);
  const Matrix h0 = st.channel.h;
  for (int t = 0; t < 5; ++t) {
    st = step_env(st, rng);
    CHECK(st.channel.h == h0);
  }
}

TEST_CASE("batteries drain by spent energy and never go negative") {
  auto cfg = std::make_shared<ScenarioConfig>();
  EnvState st = make_initial_state(cfg, 8);
  edgespec::Rng rng(9);

  std::vector<double> before;
  for (const auto& d : st.devices) before.push_back(d.battery);
  EnvState idle = step_env(st, rng);
  for (int i = 0; i < st.num_devices(); ++i) CHECK(idle.devices[i].battery == before[i]);

  st.last_energy_j.assign(st.num_devices(), 0.0);
  st.last_energy_j[0] = 0.5 * cfg->battery_capacity_j * before[0];
  st.last_energy_j[1] = 10.0 * cfg->battery_capacity_j;
  const EnvState next = step_env(st, rng);
  CHECK(next.devices[0].battery == doctest::Approx(0.5 * before[0]));
  CHECK(next.devices[1].battery == 0.0);

  edgespec::Rng noise(10);
  for (int t = 0; t < cfg->slots - 1; ++t) {
    for (auto& e : st.last_energy_j) e = fixtures::uni(noise, 0.0, 5.0);
    const EnvState n = step_env(st, rng);
    for (int i = 0; i < st.num_devices(); ++i) {
      CHECK(n.devices[i].battery <= st.devices[i].battery);
      CHECK(n.devices[i].battery >= 0.0);
    }
    st = n;
  }
  CHECK_THROWS_AS(step_env(st, rng), edgespec::ContractViolation);
}

TEST_CASE("devices stay in the area under random waypoint mobility") {
  auto cfg = std::make_shared<ScenarioConfig>();
  cfg->speed_min_mps = 20.0;
  cfg->speed_max_mps = 60.0;
  EnvState st = make_initial_state(cfg, 12);
  edgespec::Rng rng(13);
  for (int t = 0; t < cfg->slots - 1; ++t) {
    const EnvState next = step_env(st, rng);
    for (int i = 0; i < st.num_devices(); ++i) {
      const auto& p = next.devices[i].position;
      CHECK(p.x >= 0.0);
      CHECK(p.x <= cfg->area_m);
      CHECK(p.y >= 0.0);
      CHECK(p.y <= cfg->area_m);
      CHECK(distance(p, st.devices[i].position) <= cfg->speed_max_mps * cfg->slot_seconds + 1e-9);
    }
    st = next;
  }
}

TEST_CASE("task kinds are drawn uniformly") {
  const ScenarioConfig cfg;
  edgespec::Rng rng(77);
  std::array<int, kTaskKinds> counts{};
  const int n = 10000;
  for (int k = 0; k < n; ++k) {
    const Task t = draw_task(cfg, 0, rng);
    ++counts[static_cast<int>(t.kind)];
    CHECK(t.tokens >= 1);
    CHECK(t.d_bits == t.tokens * cfg.bits_per_token);
    CHECK(t.f_md == t.tokens * cfg.draft_flops_per_token);
    CHECK(t.f_es == t.tokens * cfg.verify_flops_per_token);
  }
  for (int c : counts) CHECK(std::abs(c / static_cast<double>(n) - 1.0 / 3.0) < 0.02);
}

TEST_CASE("fixed-length tasks use the expected token count") {
  ScenarioConfig cfg;
  cfg.length_shape = 0.0;
  edgespec::Rng rng(1);
  for (int k = 0; k < 100; ++k) {
    const Task t = draw_task(cfg, 0, rng);
    const int want = t.kind == TaskKind::code ? 192 : t.kind == TaskKind::summarize ? 96 : 48;
    CHECK(t.tokens == want);
  }
}
