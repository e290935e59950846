#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "edgespec/specdec/decoding.hpp"

namespace edgespec::harness {

/// A kind of generation task: how long the output is and how closely the
/// draft model tracks the target on it.
struct DecodeProfile {
  std::string name;
  int max_tokens = 128;
  double smoothing = 0.1;
};

struct DecodeStudySpec {
  std::vector<int> gammas{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<double> rates_mbps{1.0, 10.0, 50.0, 100.0};
  std::vector<DecodeProfile> profiles{{"code", 192, 0.05}, {"summarize", 96, 0.1}, {"chat", 48, 0.2}};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  int vocab_size = 64;
  double sharpness = 3.0;
  specdec::VerificationMode mode = specdec::VerificationMode::greedy;
  double bits_per_token = 8192.0;
  double draft_flops_per_token = 2.7e8;
  double verify_flops_per_token = 3.2e9;
  double device_flops = 1e11;
  double server_flops = 2e12;
  double queue_delay_s = 0.0;

  void validate() const;
};

DecodeStudySpec decode_study_from_json(const nlohmann::json& j);

enum class Engine { conventional, parallel };
const char* to_string(Engine e);

struct DecodeRow {
  std::string run_id;
  std::uint64_t seed = 0;
  Engine engine = Engine::conventional;
  std::string profile;
  int gamma = 0;
  double rate_mbps = 0.0;
  specdec::LatencyBreakdown latency;

  double tokens_per_s() const;
  /// Fraction of the session the device spends waiting.
  double idle_fraction() const;
};

/// Every (profile, seed, gamma, rate) point for both engines, in that nesting
/// order. Each point uses a fresh model pair and verification stream keyed on
/// its seed, so rows do not depend on which other points are in the grid.
std::vector<DecodeRow> run_decoding_study(const DecodeStudySpec& spec);

DecodeRow run_decode_point(const DecodeStudySpec& spec, const DecodeProfile& profile, std::uint64_t seed,
                           int gamma, double rate_mbps, Engine engine);

std::vector<std::string> decode_csv_header();
void write_decode_csv(std::ostream& out, const std::vector<DecodeRow>& rows);

}  // namespace edgespec::harness
