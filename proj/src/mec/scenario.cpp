#include "edgespec/mec/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "edgespec/common/error.hpp"
#include "edgespec/mec/model.hpp"

namespace edgespec::mec {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!known.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void read_range(const json& obj, const char* key, double& lo, double& hi, const std::string& where) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError(where + "." + key + ": expected [min, max]");
  }
  lo = v[0].get<double>();
  hi = v[1].get<double>();
}

void check(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

TaskKind task_kind_from_string(const std::string& name) {
  if (name == "code") return TaskKind::code;
  if (name == "summarize") return TaskKind::summarize;
  if (name == "chat") return TaskKind::chat;
  throw ConfigError("unknown task kind '" + name + "'");
}

void ScenarioConfig::validate() const {
  check(devices >= 1, "scenario: devices must be >= 1");
  check(servers >= 1, "scenario: servers must be >= 1");
  check(area_m > 0.0, "scenario: area_m must be > 0");
  check(server_positions.empty() || static_cast<int>(server_positions.size()) == servers,
        "scenario: server_positions must list one position per server");
  check(speed_min_mps >= 0.0 && speed_max_mps >= speed_min_mps, "scenario: bad speed range");
  check(bandwidth_hz > 0.0, "scenario: bandwidth_hz must be > 0");
  check(tx_power_max_dbm >= tx_power_min_dbm, "scenario: bad tx power range");
  check(path_loss.d0_m > 0.0, "scenario: path_loss.d0_m must be > 0");
  check(delta_cp >= 0.0 && delta_cm >= 0.0, "scenario: energy coefficients must be >= 0");
  check(flop_unit > 0.0 && bandwidth_unit_hz > 0.0, "scenario: energy units must be > 0");
  check(lambda >= 0.0 && w >= 0.0, "scenario: lambda and w must be >= 0");
  check(slots >= 1, "scenario: slots must be >= 1");
  check(slot_seconds > 0.0, "scenario: slot_seconds must be > 0");
  check(queue_mean >= 0.0, "scenario: queue_mean must be >= 0");
  check(!device_profiles.empty() && !server_profiles.empty(), "scenario: profiles must not be empty");
  for (const auto& p : device_profiles) check(p.flops > 0.0, "scenario: device flops must be > 0");
  for (const auto& p : server_profiles) check(p.flops > 0.0, "scenario: server flops must be > 0");
  check(battery_capacity_j > 0.0, "scenario: battery capacity must be > 0");
  check(battery_min > 0.0 && battery_max <= 1.0 && battery_min <= battery_max,
        "scenario: battery range must lie in (0, 1]");
  check(battery_floor > 0.0, "scenario: battery floor must be > 0");
  check(bits_per_token > 0.0 && draft_flops_per_token > 0.0 && verify_flops_per_token > 0.0,
        "scenario: per-token costs must be > 0");
  check(!task_profiles.empty(), "scenario: need at least one task profile");
  for (const auto& t : task_profiles) check(t.expected_tokens >= 1.0, "scenario: expected tokens must be >= 1");
}

ScenarioConfig scenario_from_json(const json& j) {
  ScenarioConfig c;
  reject_unknown(j,
                 {"devices", "servers", "area_m", "server_positions", "speed_mps", "bandwidth_hz",
                  "tx_power_dbm", "noise_psd_dbm_hz", "path_loss", "snr_mode", "log_base", "energy",
                  "lambda", "w", "slots", "slot_seconds", "kappa_s", "queue_mean",
                  "device_profiles", "server_profiles", "battery", "tasks"},
                 "scenario");
  const std::string s = "scenario";
  read(j, "devices", c.devices, s);
  read(j, "servers", c.servers, s);
  read(j, "area_m", c.area_m, s);
  if (j.contains("server_positions")) {
    c.server_positions.clear();
    for (const auto& p : j.at("server_positions")) {
      if (!p.is_array() || p.size() != 2) throw ConfigError("scenario.server_positions: expected [x, y]");
      c.server_positions.push_back({p[0].get<double>(), p[1].get<double>()});
    }
  }
  read_range(j, "speed_mps", c.speed_min_mps, c.speed_max_mps, s);
  read(j, "bandwidth_hz", c.bandwidth_hz, s);
  read_range(j, "tx_power_dbm", c.tx_power_min_dbm, c.tx_power_max_dbm, s);
  read(j, "noise_psd_dbm_hz", c.noise_psd_dbm_hz, s);
  if (j.contains("path_loss")) {
    const json& pl = j.at("path_loss");
    reject_unknown(pl, {"pl0_db", "exponent", "d0_m", "fading"}, "scenario.path_loss");
    read(pl, "pl0_db", c.path_loss.pl0_db, "path_loss");
    read(pl, "exponent", c.path_loss.exponent, "path_loss");
    read(pl, "d0_m", c.path_loss.d0_m, "path_loss");
    read(pl, "fading", c.path_loss.fading, "path_loss");
  }
  if (j.contains("snr_mode")) {
    const auto mode = j.at("snr_mode").get<std::string>();
    if (mode == "full_band") c.snr_mode = SnrMode::full_band;
    else if (mode == "psd_literal") c.snr_mode = SnrMode::psd_literal;
    else throw ConfigError("scenario.snr_mode: expected full_band or psd_literal");
  }
  if (j.contains("log_base")) {
    const auto base = j.at("log_base").get<std::string>();
    if (base == "log2") c.log_base = LogBase::two;
    else if (base == "ln") c.log_base = LogBase::natural;
    else throw ConfigError("scenario.log_base: expected log2 or ln");
  }
  if (j.contains("energy")) {
    const json& e = j.at("energy");
    reject_unknown(e, {"delta_cp", "delta_cm", "flop_unit", "bandwidth_unit_hz"}, "scenario.energy");
    read(e, "delta_cp", c.delta_cp, "energy");
    read(e, "delta_cm", c.delta_cm, "energy");
    read(e, "flop_unit", c.flop_unit, "energy");
    read(e, "bandwidth_unit_hz", c.bandwidth_unit_hz, "energy");
  }
  read(j, "lambda", c.lambda, s);
  read(j, "w", c.w, s);
  read(j, "slots", c.slots, s);
  read(j, "slot_seconds", c.slot_seconds, s);
  read(j, "kappa_s", c.kappa_s, s);
  read(j, "queue_mean", c.queue_mean, s);
  if (j.contains("device_profiles")) {
    c.device_profiles.clear();
    for (const auto& p : j.at("device_profiles")) {
      reject_unknown(p, {"name", "flops"}, "scenario.device_profiles");
      c.device_profiles.push_back({p.value("name", std::string("device")), p.at("flops").get<double>()});
    }
  }
  if (j.contains("server_profiles")) {
    c.server_profiles.clear();
    for (const auto& p : j.at("server_profiles")) {
      reject_unknown(p, {"name", "flops"}, "scenario.server_profiles");
      c.server_profiles.push_back({p.value("name", std::string("server")), p.at("flops").get<double>()});
    }
  }
  if (j.contains("battery")) {
    const json& b = j.at("battery");
    reject_unknown(b, {"capacity_j", "initial", "floor"}, "scenario.battery");
    read(b, "capacity_j", c.battery_capacity_j, "battery");
    read_range(b, "initial", c.battery_min, c.battery_max, "battery");
    read(b, "floor", c.battery_floor, "battery");
  }
  if (j.contains("tasks")) {
    const json& t = j.at("tasks");
    reject_unknown(t,
                   {"bits_per_token", "draft_flops_per_token", "verify_flops_per_token",
                    "expected_tokens", "length_shape"},
                   "scenario.tasks");
    read(t, "bits_per_token", c.bits_per_token, "tasks");
    read(t, "draft_flops_per_token", c.draft_flops_per_token, "tasks");
    read(t, "verify_flops_per_token", c.verify_flops_per_token, "tasks");
    read(t, "length_shape", c.length_shape, "tasks");
    if (t.contains("expected_tokens")) {
      c.task_profiles.clear();
      for (const auto& [kind, tokens] : t.at("expected_tokens").items()) {
        c.task_profiles.push_back({task_kind_from_string(kind), tokens.get<double>()});
      }
    }
  }
  c.validate();
  return c;
}

json scenario_to_json(const ScenarioConfig& c) {
  json positions = json::array();
  for (const auto& p : c.server_positions) positions.push_back({p.x, p.y});
  json devices = json::array();
  for (const auto& p : c.device_profiles) devices.push_back({{"name", p.name}, {"flops", p.flops}});
  json servers = json::array();
  for (const auto& p : c.server_profiles) servers.push_back({{"name", p.name}, {"flops", p.flops}});
  json tokens = json::object();
  for (const auto& t : c.task_profiles) tokens[to_string(t.kind)] = t.expected_tokens;
  return {
      {"devices", c.devices},
      {"servers", c.servers},
      {"area_m", c.area_m},
      {"server_positions", positions},
      {"speed_mps", {c.speed_min_mps, c.speed_max_mps}},
      {"bandwidth_hz", c.bandwidth_hz},
      {"tx_power_dbm", {c.tx_power_min_dbm, c.tx_power_max_dbm}},
      {"noise_psd_dbm_hz", c.noise_psd_dbm_hz},
      {"path_loss",
       {{"pl0_db", c.path_loss.pl0_db},
        {"exponent", c.path_loss.exponent},
        {"d0_m", c.path_loss.d0_m},
        {"fading", c.path_loss.fading}}},
      {"snr_mode", c.snr_mode == SnrMode::full_band ? "full_band" : "psd_literal"},
      {"log_base", c.log_base == LogBase::two ? "log2" : "ln"},
      {"energy",
       {{"delta_cp", c.delta_cp},
        {"delta_cm", c.delta_cm},
        {"flop_unit", c.flop_unit},
        {"bandwidth_unit_hz", c.bandwidth_unit_hz}}},
      {"lambda", c.lambda},
      {"w", c.w},
      {"slots", c.slots},
      {"slot_seconds", c.slot_seconds},
      {"kappa_s", c.kappa_s},
      {"queue_mean", c.queue_mean},
      {"device_profiles", devices},
      {"server_profiles", servers},
      {"battery",
       {{"capacity_j", c.battery_capacity_j},
        {"initial", {c.battery_min, c.battery_max}},
        {"floor", c.battery_floor}}},
      {"tasks",
       {{"bits_per_token", c.bits_per_token},
        {"draft_flops_per_token", c.draft_flops_per_token},
        {"verify_flops_per_token", c.verify_flops_per_token},
        {"expected_tokens", tokens},
        {"length_shape", c.length_shape}}},
  };
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("scenario file " + path.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

namespace {

Vec2 random_point(double side, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, side);
  const double x = u(rng);
  return {x, u(rng)};
}

double draw_speed(const ScenarioConfig& cfg, Rng& rng) {
  if (cfg.speed_max_mps <= cfg.speed_min_mps) return cfg.speed_min_mps;
  return std::uniform_real_distribution<double>(cfg.speed_min_mps, cfg.speed_max_mps)(rng);
}

Vec2 heading(const Vec2& from, const Vec2& to, double speed) {
  const double d = distance(from, to);
  if (d <= 0.0 || speed <= 0.0) return {};
  return {(to.x - from.x) / d * speed, (to.y - from.y) / d * speed};
}

int draw_queue(double mean, Rng& rng) {
  if (mean <= 0.0) return 0;
  return std::poisson_distribution<int>(mean)(rng);
}

}  // namespace

Task draw_task(const ScenarioConfig& cfg, int owner, Rng& rng) {
  const auto n = cfg.task_profiles.size();
  const auto& profile =
      cfg.task_profiles[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)];
  double tokens = profile.expected_tokens;
  if (cfg.length_shape > 0.0) {
    tokens = std::gamma_distribution<double>(cfg.length_shape,
                                             profile.expected_tokens / cfg.length_shape)(rng);
  }
  Task t;
  t.owner = owner;
  t.kind = profile.kind;
  t.tokens = std::max(1, static_cast<int>(std::lround(tokens)));
  t.d_bits = t.tokens * cfg.bits_per_token;
  t.f_md = t.tokens * cfg.draft_flops_per_token;
  t.f_es = t.tokens * cfg.verify_flops_per_token;
  return t;
}

EnvState make_initial_state(std::shared_ptr<const ScenarioConfig> config, std::uint64_t seed) {
  require(config != nullptr, "make_initial_state: missing config");
  const ScenarioConfig& cfg = *config;
  cfg.validate();
  EnvState st;
  st.config = config;
  st.seed = seed;
  st.slot = 0;

  Rng placement = make_stream(seed, "placement");
  st.devices.resize(cfg.devices);
  for (int i = 0; i < cfg.devices; ++i) {
    MobileDevice& d = st.devices[i];
    d.id = i;
    const auto& prof = cfg.device_profiles[std::uniform_int_distribution<std::size_t>(
        0, cfg.device_profiles.size() - 1)(placement)];
    d.profile = prof.name;
    d.local_flops = prof.flops;
    d.position = random_point(cfg.area_m, placement);
    d.waypoint = random_point(cfg.area_m, placement);
    d.velocity = heading(d.position, d.waypoint, draw_speed(cfg, placement));
    const double dbm = cfg.tx_power_max_dbm > cfg.tx_power_min_dbm
                           ? std::uniform_real_distribution<double>(cfg.tx_power_min_dbm,
                                                                    cfg.tx_power_max_dbm)(placement)
                           : cfg.tx_power_min_dbm;
    d.tx_power_w = dbm_to_watts(dbm);
    d.battery = cfg.battery_max > cfg.battery_min
                    ? std::uniform_real_distribution<double>(cfg.battery_min, cfg.battery_max)(placement)
                    : cfg.battery_max;
    d.battery_capacity_j = cfg.battery_capacity_j;
  }

  Rng queues = make_stream(seed, "queue");
  st.servers.resize(cfg.servers);
  const double centre = cfg.area_m / 2.0;
  for (int j = 0; j < cfg.servers; ++j) {
    EdgeServer& s = st.servers[j];
    s.id = j;
    const auto& prof = cfg.server_profiles[static_cast<std::size_t>(j) % cfg.server_profiles.size()];
    s.profile = prof.name;
    s.flops = prof.flops;
    if (!cfg.server_positions.empty()) {
      s.position = cfg.server_positions[j];
    } else if (cfg.servers == 1) {
      s.position = {centre, centre};
    } else {
      const double angle = std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * j / cfg.servers;
      s.position = {centre + 0.3 * cfg.area_m * std::cos(angle),
                    centre + 0.3 * cfg.area_m * std::sin(angle)};
    }
    s.bandwidth_hz = cfg.bandwidth_hz / cfg.servers;
    s.slot_seconds = cfg.kappa();
    s.queue_slots = draw_queue(cfg.queue_mean, queues);
  }

  st.channel.noise_psd_w_hz = dbm_to_watts(cfg.noise_psd_dbm_hz);
  st.channel.h = channel_gains(st);

  Rng tasks = make_stream(seed, "tasks");
  for (int i = 0; i < cfg.devices; ++i) st.tasks.push_back(draw_task(cfg, i, tasks));
  st.last_energy_j.assign(cfg.devices, 0.0);
  return st;
}

EnvState step_env(const EnvState& state, Rng& rng) {
  const ScenarioConfig& cfg = *state.config;
  require(state.slot >= 0 && state.slot < cfg.slots - 1, "step_env: slot out of range");
  EnvState next = state;
  next.slot = state.slot + 1;

  for (auto& d : next.devices) {
    const double speed = std::hypot(d.velocity.x, d.velocity.y);
    const double travel = speed * cfg.slot_seconds;
    const double remaining = distance(d.position, d.waypoint);
    if (speed <= 0.0) continue;
    if (travel >= remaining) {
      d.position = d.waypoint;
      d.waypoint = random_point(cfg.area_m, rng);
      d.velocity = heading(d.position, d.waypoint, draw_speed(cfg, rng));
    } else {
      d.position.x += d.velocity.x * cfg.slot_seconds;
      d.position.y += d.velocity.y * cfg.slot_seconds;
    }
  }

  for (std::size_t i = 0; i < next.devices.size(); ++i) {
    auto& d = next.devices[i];
    const double spent = i < state.last_energy_j.size() ? state.last_energy_j[i] : 0.0;
    d.battery = std::max(0.0, d.battery - spent / d.battery_capacity_j);
  }
  next.last_energy_j.assign(next.devices.size(), 0.0);

  for (auto& s : next.servers) s.queue_slots = draw_queue(cfg.queue_mean, rng);
  next.channel.h = channel_gains(next);
  for (int i = 0; i < next.num_devices(); ++i) next.tasks[i] = draw_task(cfg, i, rng);
  return next;
}

}  // namespace edgespec::mec
