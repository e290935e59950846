#include "edgespec/harness/decode_study.hpp"

#include <ostream>
#include <set>

#include "edgespec/common/error.hpp"
#include "edgespec/harness/csv.hpp"
#include "edgespec/specdec/language_model.hpp"

namespace edgespec::harness {

using nlohmann::json;

void DecodeStudySpec::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("decode study: " + msg); };
  if (gammas.empty() || rates_mbps.empty() || profiles.empty() || seeds.empty()) fail("every grid axis needs a value");
  for (int g : gammas) {
    if (g < 1) fail("gamma must be >= 1");
  }
  for (double r : rates_mbps) {
    if (!(r > 0.0)) fail("rates must be positive");
  }
  std::set<std::string> names;
  for (const auto& p : profiles) {
    if (p.name.empty() || p.name.find(',') != std::string::npos) fail("bad profile name '" + p.name + "'");
    if (!names.insert(p.name).second) fail("duplicate profile '" + p.name + "'");
    if (p.max_tokens < 1) fail("max_tokens must be >= 1");
    if (!(p.smoothing >= 0.0 && p.smoothing <= 1.0)) fail("smoothing must be in [0, 1]");
  }
  if (vocab_size < 2) fail("vocab_size must be >= 2");
  if (!(sharpness > 0.0)) fail("sharpness must be positive");
  if (!(bits_per_token > 0.0 && draft_flops_per_token > 0.0 && verify_flops_per_token > 0.0)) {
    fail("cost fields must be positive");
  }
  if (!(device_flops > 0.0 && server_flops > 0.0)) fail("compute rates must be positive");
  if (!(queue_delay_s >= 0.0)) fail("queue delay must be non-negative");
}

namespace {

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

DecodeStudySpec decode_study_from_json(const json& j) {
  static const std::set<std::string> known{"gammas",       "rates_mbps",    "profiles",
                                           "seeds",        "vocab_size",    "sharpness",
                                           "mode",         "bits_per_token", "draft_flops_per_token",
                                           "verify_flops_per_token", "device_flops", "server_flops",
                                           "queue_delay_s"};
  if (!j.is_object()) throw ConfigError("decode study: expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ConfigError("decode study: unknown key '" + k + "'");
  }
  DecodeStudySpec s;
  try {
    read(j, "gammas", s.gammas);
    read(j, "rates_mbps", s.rates_mbps);
    read(j, "seeds", s.seeds);
    read(j, "vocab_size", s.vocab_size);
    read(j, "sharpness", s.sharpness);
    read(j, "bits_per_token", s.bits_per_token);
    read(j, "draft_flops_per_token", s.draft_flops_per_token);
    read(j, "verify_flops_per_token", s.verify_flops_per_token);
    read(j, "device_flops", s.device_flops);
    read(j, "server_flops", s.server_flops);
    read(j, "queue_delay_s", s.queue_delay_s);
    if (j.contains("mode")) {
      const auto m = j.at("mode").get<std::string>();
      if (m == "greedy") {
        s.mode = specdec::VerificationMode::greedy;
      } else if (m == "stochastic") {
        s.mode = specdec::VerificationMode::stochastic;
      } else {
        throw ConfigError("decode study: unknown mode '" + m + "'");
      }
    }
    if (j.contains("profiles")) {
      s.profiles.clear();
      for (const auto& p : j.at("profiles")) {
        for (const auto& [k, v] : p.items()) {
          if (k != "name" && k != "max_tokens" && k != "smoothing") {
            throw ConfigError("decode study: unknown profile key '" + k + "'");
          }
        }
        DecodeProfile dp;
        dp.name = p.at("name").get<std::string>();
        read(p, "max_tokens", dp.max_tokens);
        read(p, "smoothing", dp.smoothing);
        s.profiles.push_back(dp);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("decode study: ") + e.what());
  }
  s.validate();
  return s;
}

const char* to_string(Engine e) { return e == Engine::conventional ? "conventional" : "parallel"; }

double DecodeRow::tokens_per_s() const {
  return latency.total_s > 0.0 ? latency.tokens_out / latency.total_s : 0.0;
}

double DecodeRow::idle_fraction() const {
  return latency.total_s > 0.0 ? latency.device_idle_s / latency.total_s : 0.0;
}

DecodeRow run_decode_point(const DecodeStudySpec& spec, const DecodeProfile& profile, std::uint64_t seed, int gamma,
                           double rate_mbps, Engine engine) {
  const specdec::SyntheticLM target(seed, spec.vocab_size, 0.0, spec.sharpness);
  const specdec::SyntheticLM draft = target.with_smoothing(profile.smoothing);
  specdec::DecodeConfig cfg;
  cfg.gamma = gamma;
  cfg.max_tokens = profile.max_tokens;
  cfg.bits_per_token = spec.bits_per_token;
  cfg.draft_flops_per_token = spec.draft_flops_per_token;
  cfg.verify_flops_per_token = spec.verify_flops_per_token;
  cfg.mode = spec.mode;
  specdec::LinkTiming timing;
  timing.device_flops = spec.device_flops;
  timing.server_flops_effective = spec.server_flops;
  timing.uplink_rate = rate_mbps * 1e6;
  timing.server_queue_delay = spec.queue_delay_s;
  Rng rng = make_stream(seed, "verify");
  const auto result = engine == Engine::conventional ? specdec::run_conventional(draft, target, cfg, timing, rng)
                                                     : specdec::run_parallel(draft, target, cfg, timing, rng);
  DecodeRow row;
  row.run_id = std::string("decode-") + profile.name + "-s" + std::to_string(seed) + "-g" + std::to_string(gamma) +
               "-r" + format_number(rate_mbps) + "-" + to_string(engine);
  row.seed = seed;
  row.engine = engine;
  row.profile = profile.name;
  row.gamma = gamma;
  row.rate_mbps = rate_mbps;
  row.latency = result.latency;
  return row;
}

std::vector<DecodeRow> run_decoding_study(const DecodeStudySpec& spec) {
  spec.validate();
  std::vector<DecodeRow> rows;
  for (const auto& profile : spec.profiles) {
    for (auto seed : spec.seeds) {
      for (int gamma : spec.gammas) {
        for (double rate : spec.rates_mbps) {
          for (Engine e : {Engine::conventional, Engine::parallel}) {
            rows.push_back(run_decode_point(spec, profile, seed, gamma, rate, e));
          }
        }
      }
    }
  }
  return rows;
}

std::vector<std::string> decode_csv_header() {
  return {"schema_version", "run_id",           "seed",        "engine",         "profile",
          "gamma",          "rate_mbps",        "tokens",      "rounds",         "latency_s",
          "mobile_compute_s", "uplink_s",       "server_compute_s", "device_idle_s", "server_idle_s",
          "tokens_per_s",   "idle_fraction"};
}

void write_decode_csv(std::ostream& out, const std::vector<DecodeRow>& rows) {
  write_csv_line(out, decode_csv_header());
  for (const auto& r : rows) {
    const auto& l = r.latency;
    write_csv_line(out, {std::to_string(kSchemaVersion), r.run_id, std::to_string(r.seed), to_string(r.engine),
                         r.profile, std::to_string(r.gamma), format_number(r.rate_mbps),
                         std::to_string(l.tokens_out), std::to_string(l.rounds), format_number(l.total_s),
                         format_number(l.mobile_compute_s), format_number(l.uplink_s),
                         format_number(l.server_compute_s), format_number(l.device_idle_s),
                         format_number(l.server_idle_s), format_number(r.tokens_per_s()),
                         format_number(r.idle_fraction())});
  }
}

}  // namespace edgespec::harness
