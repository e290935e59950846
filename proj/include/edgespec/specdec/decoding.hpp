#pragma once

#include <optional>
#include <span>
#include <vector>

#include "edgespec/common/rng.hpp"
#include "edgespec/specdec/language_model.hpp"

namespace edgespec::specdec {

enum class VerificationMode { greedy, stochastic };

struct DecodeConfig {
  int gamma = 4;
  int max_tokens = 64;
  std::optional<Token> eos_token;
  double bits_per_token = 64.0;
  double draft_flops_per_token = 2.7e8;
  double verify_flops_per_token = 3.2e9;
  VerificationMode mode = VerificationMode::greedy;

  void validate() const;
};

/// Compute and link rates seen by one device/server pair.
struct LinkTiming {
  double device_flops = 1e10;
  double server_flops_effective = 1e12;
  double uplink_rate = 1e7;
  /// Admission wait before the session starts; charged once.
  double server_queue_delay = 0.0;

  void validate() const;

  double draft_seconds(const DecodeConfig& cfg) const {
    return cfg.draft_flops_per_token / device_flops;
  }
  double upload_seconds(const DecodeConfig& cfg) const {
    return cfg.bits_per_token / uplink_rate;
  }
  double verify_seconds(const DecodeConfig& cfg) const {
    return cfg.verify_flops_per_token / server_flops_effective;
  }
};

struct LatencyBreakdown {
  double mobile_compute_s = 0.0;
  double uplink_s = 0.0;
  double server_compute_s = 0.0;
  double device_idle_s = 0.0;
  double server_idle_s = 0.0;
  double total_s = 0.0;
  int tokens_out = 0;
  int rounds = 0;
  int tokens_discarded = 0;
};

enum class PhaseState { PreVerify, PostVerify };

enum class EventKind { DraftDone, UplinkDone, VerifyDone };

struct TraceEvent {
  double time;
  EventKind kind;
  int epoch;
  int detail;  // tokens drafted so far / batch id, by kind
};

struct DecodeResult {
  std::vector<Token> tokens;
  LatencyBreakdown latency;
  /// Tokens each verification round produced (accepted drafts plus the
  /// target's token), counted before the output is cut at max_tokens or EOS.
  std::vector<int> tokens_per_round;
  /// Phase after every transition, starting with the initial phase.
  std::vector<PhaseState> phases;
  std::vector<TraceEvent> trace;
};

/// Acceptance rate of a draft token with target mass p and draft mass q.
/// q = 0 is treated as accept: the draft sampler never proposes such a token.
double acceptance_probability(double p_val, double q_val);

struct VerifyOutcome {
  int accepted = 0;
  /// Target-regenerated token at the first rejection, or the bonus token
  /// when everything was accepted and a bonus distribution was supplied.
  std::optional<Token> replacement;
};

/// Checks drafted tokens left to right against the target distributions.
///
/// target_dists holds gamma or gamma + 1 entries; the optional extra entry
/// supplies the bonus token on full acceptance. Stochastic mode draws one
/// uniform per examined token (accept iff u < acceptance rate) and one more
/// for the replacement; greedy mode draws nothing.
VerifyOutcome verify_batch(std::span<const Distribution> target_dists,
                           std::span<const Token> draft_tokens,
                           std::span<const Distribution> draft_dists, VerificationMode mode,
                           Rng& rng);

/// Draft-then-verify with strictly alternating rounds.
DecodeResult run_conventional(const LanguageModel& draft, const LanguageModel& target,
                              const DecodeConfig& cfg, const LinkTiming& timing, Rng& rng);

/// Event-driven parallel speculative decoding with pre-/post-verify phases.
DecodeResult run_parallel(const LanguageModel& draft, const LanguageModel& target,
                          const DecodeConfig& cfg, const LinkTiming& timing, Rng& rng);

/// Server-only greedy decoding; the reference sequence for greedy mode.
DecodeResult target_only_decode(const LanguageModel& target, const DecodeConfig& cfg,
                                const LinkTiming& timing);

}  // namespace edgespec::specdec
