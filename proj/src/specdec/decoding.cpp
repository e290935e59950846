#include "edgespec/specdec/decoding.hpp"

#include <cmath>
#include <deque>
#include <queue>
#include <stdexcept>
#include <string>

#include "edgespec/common/error.hpp"

namespace edgespec::specdec {

void DecodeConfig::validate() const {
  require(gamma >= 1, "DecodeConfig: gamma must be >= 1");
  require(max_tokens >= 1, "DecodeConfig: max_tokens must be >= 1");
  require(bits_per_token > 0.0, "DecodeConfig: bits_per_token must be > 0");
  require(draft_flops_per_token > 0.0, "DecodeConfig: draft_flops_per_token must be > 0");
  require(verify_flops_per_token > 0.0, "DecodeConfig: verify_flops_per_token must be > 0");
}

void LinkTiming::validate() const {
  require(device_flops > 0.0, "LinkTiming: device_flops must be > 0");
  require(server_flops_effective > 0.0, "LinkTiming: server_flops_effective must be > 0");
  require(uplink_rate > 0.0, "LinkTiming: uplink_rate must be > 0");
  require(server_queue_delay >= 0.0, "LinkTiming: server_queue_delay must be >= 0");
}

double acceptance_probability(double p_val, double q_val) {
  require(p_val >= 0.0 && p_val <= 1.0, "acceptance_probability: p outside [0, 1]");
  require(q_val >= 0.0 && q_val <= 1.0, "acceptance_probability: q outside [0, 1]");
  if (q_val <= 0.0 || p_val >= q_val) return 1.0;
  return p_val / q_val;
}

namespace {

Token regenerate(const Distribution& target, VerificationMode mode, Rng& rng) {
  if (mode == VerificationMode::greedy) return argmax(target);
  return sample_with(target, uniform01(rng));
}

Token propose(const Distribution& draft, VerificationMode mode, Rng& rng) {
  if (mode == VerificationMode::greedy) return argmax(draft);
  return sample_with(draft, uniform01(rng));
}

bool is_eos(const DecodeConfig& cfg, Token t) { return cfg.eos_token && *cfg.eos_token == t; }

void finalize_idle(LatencyBreakdown& lat) {
  lat.device_idle_s = std::max(0.0, lat.total_s - lat.mobile_compute_s);
  lat.server_idle_s = std::max(0.0, lat.total_s - lat.server_compute_s);
}

}  // namespace

VerifyOutcome verify_batch(std::span<const Distribution> target_dists,
                           std::span<const Token> draft_tokens,
                           std::span<const Distribution> draft_dists, VerificationMode mode,
                           Rng& rng) {
  const std::size_t n = draft_tokens.size();
  if (draft_dists.size() != n) {
    throw ContractViolation("verify_batch: draft_dists has " + std::to_string(draft_dists.size()) +
                            " entries for " + std::to_string(n) + " draft tokens");
  }
  if (target_dists.size() != n && target_dists.size() != n + 1) {
    throw ContractViolation("verify_batch: target_dists must hold gamma or gamma + 1 entries");
  }

  for (std::size_t i = 0; i < n; ++i) {
    const Token tok = draft_tokens[i];
    const auto& p = target_dists[i];
    const auto& q = draft_dists[i];
    require(tok >= 0 && static_cast<std::size_t>(tok) < p.size() &&
                static_cast<std::size_t>(tok) < q.size(),
            "verify_batch: draft token outside vocabulary");
    bool accepted = false;
    if (mode == VerificationMode::greedy) {
      accepted = tok == argmax(p);
    } else {
      accepted = uniform01(rng) < acceptance_probability(p[tok], q[tok]);
    }
    if (!accepted) return {static_cast<int>(i), regenerate(p, mode, rng)};
  }
  if (target_dists.size() == n + 1) {
    return {static_cast<int>(n), regenerate(target_dists[n], mode, rng)};
  }
  return {static_cast<int>(n), std::nullopt};
}

DecodeResult run_conventional(const LanguageModel& draft, const LanguageModel& target,
                              const DecodeConfig& cfg, const LinkTiming& timing, Rng& rng) {
  cfg.validate();
  timing.validate();
  const double td = timing.draft_seconds(cfg);
  const double tu = timing.upload_seconds(cfg);
  const double tv = timing.verify_seconds(cfg);

  DecodeResult out;
  auto& lat = out.latency;
  double now = timing.server_queue_delay;
  std::vector<Token>& seq = out.tokens;
  bool finished = false;

  while (!finished) {
    std::vector<Token> drafted;
    std::vector<Distribution> q_dists;
    std::vector<Token> ctx = seq;
    for (int k = 0; k < cfg.gamma; ++k) {
      q_dists.push_back(draft.next_distribution(ctx));
      drafted.push_back(propose(q_dists.back(), cfg.mode, rng));
      ctx.push_back(drafted.back());
      out.trace.push_back({now + (k + 1) * td, EventKind::DraftDone, 0, k + 1});
    }
    now += cfg.gamma * td;
    lat.mobile_compute_s += cfg.gamma * td;

    now += cfg.gamma * tu;
    lat.uplink_s += cfg.gamma * tu;
    out.trace.push_back({now, EventKind::UplinkDone, 0, lat.rounds});

    std::vector<Distribution> p_dists;
    ctx = seq;
    for (int k = 0; k <= cfg.gamma; ++k) {
      p_dists.push_back(target.next_distribution(ctx));
      if (k < cfg.gamma) ctx.push_back(drafted[k]);
    }
    now += (cfg.gamma + 1) * tv;
    lat.server_compute_s += (cfg.gamma + 1) * tv;
    out.trace.push_back({now, EventKind::VerifyDone, 0, lat.rounds});

    const VerifyOutcome verdict = verify_batch(p_dists, drafted, q_dists, cfg.mode, rng);
    std::vector<Token> produced(drafted.begin(), drafted.begin() + verdict.accepted);
    produced.push_back(*verdict.replacement);

    for (Token tok : produced) {
      seq.push_back(tok);
      if (is_eos(cfg, tok) || static_cast<int>(seq.size()) >= cfg.max_tokens) {
        finished = true;
        break;
      }
    }
    lat.tokens_discarded += cfg.gamma - verdict.accepted;
    lat.rounds += 1;
    out.tokens_per_round.push_back(static_cast<int>(produced.size()));
  }

  lat.total_s = now;
  lat.tokens_out = static_cast<int>(seq.size());
  finalize_idle(lat);
  return out;
}

DecodeResult target_only_decode(const LanguageModel& target, const DecodeConfig& cfg,
                                const LinkTiming& timing) {
  cfg.validate();
  timing.validate();
  const double tv = timing.verify_seconds(cfg);

  DecodeResult out;
  auto& lat = out.latency;
  double now = timing.server_queue_delay;
  while (static_cast<int>(out.tokens.size()) < cfg.max_tokens) {
    const Token tok = argmax(target.next_distribution(out.tokens));
    now += tv;
    lat.server_compute_s += tv;
    lat.rounds += 1;
    out.tokens.push_back(tok);
    out.tokens_per_round.push_back(1);
    out.trace.push_back({now, EventKind::VerifyDone, 0, lat.rounds});
    if (is_eos(cfg, tok)) break;
  }
  lat.total_s = now;
  lat.tokens_out = static_cast<int>(out.tokens.size());
  finalize_idle(lat);
  return out;
}

namespace {

struct Batch {
  int id = 0;
  int epoch = 0;
  std::size_t start = 0;  // output position of tokens[0]
  std::vector<Token> tokens;
  std::vector<Distribution> q;
};

struct Event {
  double time;
  int priority;  // 0 = server side, 1 = device side
  std::uint64_t order;
  EventKind kind;
  int epoch;
  int id;
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    if (a.priority != b.priority) return a.priority > b.priority;
    return a.order > b.order;
  }
};

constexpr int kPrecomputeJob = -1;

// One device and one server running parallel speculative decoding.
//
// PreVerify: the server computes the target distribution for the committed
// prefix while the device drafts one batch, then the device waits for the
// verdict on that batch's first token. A rejection discards the batch and
// restarts drafting from the corrected prefix; an acceptance moves to
// PostVerify, where the device drafts continuously and the server verifies
// arriving batches in FIFO order. Any rejection returns to PreVerify and
// invalidates everything drafted past the rejection point.
//
// Every batch verification also computes the target distribution one
// position past the batch. If the device has already drafted that position,
// the distribution pre-checks the next batch's first token; otherwise the
// server commits its own token there and the device skips ahead.
class ParallelSession {
 public:
  ParallelSession(const LanguageModel& draft, const LanguageModel& target, const DecodeConfig& cfg,
                  const LinkTiming& timing, Rng& rng)
      : draft_(draft),
        target_(target),
        cfg_(cfg),
        rng_(rng),
        td_(timing.draft_seconds(cfg)),
        tu_(timing.upload_seconds(cfg)),
        tv_(timing.verify_seconds(cfg)),
        start_time_(timing.server_queue_delay) {}

  DecodeResult run() {
    out_.phases.push_back(phase_);
    start_precompute(start_time_);
    try_draft(start_time_);

    while (!finished_) {
      if (events_.empty()) throw std::logic_error("run_parallel: event queue drained before completion");
      const Event ev = events_.top();
      events_.pop();
      switch (ev.kind) {
        case EventKind::DraftDone: on_draft_done(ev); break;
        case EventKind::UplinkDone: on_uplink_done(ev); break;
        case EventKind::VerifyDone: on_verify_done(ev); break;
      }
    }

    auto& lat = out_.latency;
    lat.total_s = finish_time_;
    lat.mobile_compute_s = mobile_busy_;
    lat.uplink_s = uplink_busy_;
    lat.server_compute_s = server_busy_time_;
    lat.tokens_out = static_cast<int>(committed_.size());
    lat.tokens_discarded = drafted_count_ - accepted_count_;
    finalize_idle(lat);
    out_.tokens = committed_;
    return std::move(out_);
  }

 private:
  void schedule(double time, EventKind kind, int id) {
    const int priority = kind == EventKind::DraftDone ? 1 : 0;
    events_.push({time, priority, next_order_++, kind, epoch_, id});
  }

  std::size_t speculative_length() const { return committed_.size() + spec_tokens_.size(); }

  // ---- device ----

  void try_draft(double now) {
    if (finished_ || drafting_ || awaiting_verdict_) return;
    if (speculative_length() >= static_cast<std::size_t>(cfg_.max_tokens)) return;
    if (!spec_tokens_.empty() && is_eos(cfg_, spec_tokens_.back())) return;

    std::vector<Token> ctx = committed_;
    ctx.insert(ctx.end(), spec_tokens_.begin(), spec_tokens_.end());
    pending_q_ = draft_.next_distribution(ctx);
    pending_token_ = propose(pending_q_, cfg_.mode, rng_);
    drafting_ = true;
    draft_started_ = now;
    schedule(now + td_, EventKind::DraftDone, 0);
  }

  void on_draft_done(const Event& ev) {
    if (ev.epoch != epoch_) return;  // cancelled by a correction
    drafting_ = false;
    mobile_busy_ += td_;
    ++drafted_count_;
    spec_tokens_.push_back(pending_token_);
    open_.tokens.push_back(pending_token_);
    open_.q.push_back(std::move(pending_q_));
    out_.trace.push_back({ev.time, EventKind::DraftDone, epoch_,
                          static_cast<int>(speculative_length())});

    const bool full = static_cast<int>(open_.tokens.size()) == cfg_.gamma;
    const bool at_limit = speculative_length() >= static_cast<std::size_t>(cfg_.max_tokens);
    if (full || at_limit || is_eos(cfg_, pending_token_)) {
      send_open_batch(ev.time);
      if (phase_ == PhaseState::PreVerify) awaiting_verdict_ = true;
    }
    try_draft(ev.time);
  }

  void send_open_batch(double now) {
    open_.id = next_batch_id_++;
    open_.epoch = epoch_;
    uplink_queue_.push_back(std::move(open_));
    open_ = Batch{};
    open_.start = speculative_length();
    try_uplink(now);
  }

  // ---- uplink ----

  void try_uplink(double now) {
    if (link_busy_ || uplink_queue_.empty()) return;
    in_flight_ = std::move(uplink_queue_.front());
    uplink_queue_.pop_front();
    link_busy_ = true;
    link_started_ = now;
    schedule(now + tu_ * static_cast<double>(in_flight_.tokens.size()), EventKind::UplinkDone,
             in_flight_.id);
  }

  void on_uplink_done(const Event& ev) {
    link_busy_ = false;
    uplink_busy_ += ev.time - link_started_;
    Batch arrived = std::move(in_flight_);
    in_flight_ = Batch{};
    out_.trace.push_back({ev.time, EventKind::UplinkDone, arrived.epoch, arrived.id});
    try_uplink(ev.time);
    if (arrived.epoch != epoch_) return;  // stale speculation, dropped on arrival
    server_queue_.push_back(std::move(arrived));
    try_serve(ev.time);
  }

  // ---- server ----

  void start_precompute(double now) {
    server_busy_ = true;
    server_started_ = now;
    schedule(now + tv_, EventKind::VerifyDone, kPrecomputeJob);
  }

  void try_serve(double now) {
    if (finished_ || server_busy_ || server_queue_.empty()) return;
    Batch& batch = server_queue_.front();
    if (batch.start != committed_.size()) {
      throw std::logic_error("run_parallel: batch does not start at the committed frontier");
    }
    if (!lookahead_) {
      begin_verify(now, 0);
      return;
    }
    // First token checked against the distribution the server already holds.
    const std::vector<Distribution> p_span{std::move(*lookahead_)};
    lookahead_.reset();
    const VerifyOutcome verdict = verify_batch(p_span, std::span(batch.tokens).first(1),
                                               std::span(batch.q).first(1), cfg_.mode, rng_);
    if (verdict.accepted == 0) {
      out_.latency.rounds += 1;
      out_.tokens_per_round.push_back(1);
      correct(now, *verdict.replacement);
      return;
    }
    commit_accepted(batch.tokens[0]);
    if (check_finished(now)) return;
    set_phase(PhaseState::PostVerify);
    awaiting_verdict_ = false;
    try_draft(now);
    begin_verify(now, 1);
  }

  // Verifies tokens[offset..] and computes one extra position past the batch.
  void begin_verify(double now, std::size_t offset) {
    Batch& batch = server_queue_.front();
    active_offset_ = offset;
    server_busy_ = true;
    server_started_ = now;
    const double cost = tv_ * static_cast<double>(batch.tokens.size() - offset + 1);
    schedule(now + cost, EventKind::VerifyDone, batch.id);
  }

  void on_verify_done(const Event& ev) {
    server_busy_ = false;
    server_busy_time_ += ev.time - server_started_;
    out_.trace.push_back({ev.time, EventKind::VerifyDone, epoch_, ev.id});

    if (ev.id == kPrecomputeJob) {
      lookahead_ = target_.next_distribution(committed_);
      try_serve(ev.time);
      return;
    }

    Batch batch = std::move(server_queue_.front());
    server_queue_.pop_front();
    const std::size_t offset = active_offset_;
    std::vector<Distribution> p_dists;
    std::vector<Token> ctx = committed_;
    for (std::size_t k = offset; k < batch.tokens.size(); ++k) {
      p_dists.push_back(target_.next_distribution(ctx));
      ctx.push_back(batch.tokens[k]);
    }
    Distribution bonus = target_.next_distribution(ctx);
    const VerifyOutcome verdict =
        verify_batch(p_dists, std::span(batch.tokens).subspan(offset),
                     std::span(batch.q).subspan(offset), cfg_.mode, rng_);

    out_.latency.rounds += 1;
    int produced = static_cast<int>(offset) + verdict.accepted;
    for (int k = 0; k < verdict.accepted; ++k) {
      commit_accepted(batch.tokens[offset + k]);
      if (check_finished(ev.time)) {
        out_.tokens_per_round.push_back(produced);
        return;
      }
    }
    if (verdict.replacement) {
      out_.tokens_per_round.push_back(produced + 1);
      correct(ev.time, *verdict.replacement);
      return;
    }

    if (!spec_tokens_.empty()) {
      // The device already drafted past the batch: keep the extra position
      // to pre-check the next batch's first token.
      out_.tokens_per_round.push_back(produced);
      lookahead_ = std::move(bonus);
      try_serve(ev.time);
      return;
    }
    // The device is still drafting the next position: the server's token
    // wins and the device moves on.
    out_.tokens_per_round.push_back(produced + 1);
    committed_.push_back(regenerate(bonus, cfg_.mode, rng_));
    if (check_finished(ev.time)) return;
    ++epoch_;
    cancel_draft(ev.time);
    open_ = Batch{};
    open_.start = committed_.size();
    try_draft(ev.time);
  }

  // ---- shared state transitions ----

  void commit_accepted(Token tok) {
    committed_.push_back(tok);
    ++accepted_count_;
    spec_tokens_.erase(spec_tokens_.begin());
  }

  bool check_finished(double now) {
    const bool done = static_cast<int>(committed_.size()) >= cfg_.max_tokens ||
                      (!committed_.empty() && is_eos(cfg_, committed_.back()));
    if (!done) return false;
    finished_ = true;
    finish_time_ = now;
    if (drafting_) mobile_busy_ += now - draft_started_;
    if (link_busy_) uplink_busy_ += now - link_started_;
    if (server_busy_) server_busy_time_ += now - server_started_;
    return true;
  }

  void cancel_draft(double now) {
    if (!drafting_) return;
    mobile_busy_ += now - draft_started_;
    drafting_ = false;
  }

  void set_phase(PhaseState next) {
    if (phase_ == next) return;
    phase_ = next;
    out_.phases.push_back(next);
  }

  void correct(double now, Token replacement) {
    committed_.push_back(replacement);
    if (check_finished(now)) return;

    ++epoch_;
    set_phase(PhaseState::PreVerify);
    cancel_draft(now);
    awaiting_verdict_ = false;
    spec_tokens_.clear();
    open_ = Batch{};
    open_.start = committed_.size();
    uplink_queue_.clear();
    server_queue_.clear();
    lookahead_.reset();
    start_precompute(now);
    try_draft(now);
  }

  const LanguageModel& draft_;
  const LanguageModel& target_;
  const DecodeConfig& cfg_;
  Rng& rng_;
  const double td_, tu_, tv_;
  const double start_time_;

  DecodeResult out_;
  std::priority_queue<Event, std::vector<Event>, EventLater> events_;
  std::uint64_t next_order_ = 0;
  int epoch_ = 0;
  PhaseState phase_ = PhaseState::PreVerify;
  std::vector<Token> committed_;
  bool finished_ = false;
  double finish_time_ = 0.0;

  // device
  std::vector<Token> spec_tokens_;
  Batch open_;
  bool drafting_ = false;
  bool awaiting_verdict_ = false;
  double draft_started_ = 0.0;
  Token pending_token_ = 0;
  Distribution pending_q_;
  int next_batch_id_ = 0;
  int drafted_count_ = 0;
  int accepted_count_ = 0;
  double mobile_busy_ = 0.0;

  // uplink
  std::deque<Batch> uplink_queue_;
  Batch in_flight_;
  bool link_busy_ = false;
  double link_started_ = 0.0;
  double uplink_busy_ = 0.0;

  // server
  std::deque<Batch> server_queue_;
  std::optional<Distribution> lookahead_;  // target distribution at the committed frontier
  bool server_busy_ = false;
  double server_started_ = 0.0;
  std::size_t active_offset_ = 0;
  double server_busy_time_ = 0.0;
};

}  // namespace

DecodeResult run_parallel(const LanguageModel& draft, const LanguageModel& target,
                          const DecodeConfig& cfg, const LinkTiming& timing, Rng& rng) {
  cfg.validate();
  timing.validate();
  return ParallelSession(draft, target, cfg, timing, rng).run();
}

}  // namespace edgespec::specdec
