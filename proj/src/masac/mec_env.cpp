#include "edgespec/masac/mec_env.hpp"

#include <algorithm>
#include <cmath>

#include "edgespec/baselines/baselines.hpp"
#include "edgespec/common/error.hpp"
#include "edgespec/mec/scenario.hpp"

namespace edgespec::masac {

namespace {

double scale(double v, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  return std::clamp(2.0 * (v - lo) / (hi - lo) - 1.0, -1.0, 1.0);
}

double safe_log(double v) { return std::log(std::max(v, 1e-300)); }

constexpr int kServerCommon = 4;
constexpr int kDeviceCommon = 8;  // x, y, d, f_md, f_es, battery, power, flops

}  // namespace

std::optional<WeightRange> weight_range(const std::vector<double>& choices) {
  if (choices.empty()) return std::nullopt;
  return WeightRange{*std::min_element(choices.begin(), choices.end()),
                     *std::max_element(choices.begin(), choices.end())};
}

FeatureScaler::FeatureScaler(const mec::ScenarioConfig& cfg, std::optional<WeightRange> weights)
    : cfg_(&cfg), m_(cfg.devices), e_(cfg.servers), weights_(weights) {
  const double far = cfg.area_m * std::sqrt(2.0);
  log_gain_hi_ = safe_log(mec::path_gain(cfg.path_loss.d0_m, cfg.path_loss, cfg.path_loss.fading ? 5.0 : 1.0));
  log_gain_lo_ = safe_log(mec::path_gain(far, cfg.path_loss, cfg.path_loss.fading ? 0.01 : 1.0));
  auto flops_range = [](const auto& profiles, double& lo, double& hi) {
    lo = hi = safe_log(profiles.front().flops);
    for (const auto& p : profiles) {
      lo = std::min(lo, safe_log(p.flops));
      hi = std::max(hi, safe_log(p.flops));
    }
  };
  flops_range(cfg.device_profiles, log_dev_flops_lo_, log_dev_flops_hi_);
  flops_range(cfg.server_profiles, log_srv_flops_lo_, log_srv_flops_hi_);
  double longest = 1.0;
  for (const auto& t : cfg.task_profiles) longest = std::max(longest, t.expected_tokens);
  log_tokens_hi_ = std::log(6.0 * longest);
  queue_hi_ = cfg.queue_mean + 4.0 * std::sqrt(cfg.queue_mean) + 2.0;
}

int FeatureScaler::agent_obs_size() const { return kServerCommon + e_ + (kDeviceCommon + 1) * m_ + 2; }

int FeatureScaler::state_size() const { return kServerCommon * e_ + (kDeviceCommon + e_) * m_ + 2; }

double FeatureScaler::weight_feature(double w) const {
  return weights_ ? scale(w, weights_->lo, weights_->hi) : 0.0;
}

void FeatureScaler::device_common(const mec::EnvState& state, int i, double* out) const {
  const auto& cfg = *cfg_;
  const auto& d = state.devices[i];
  const auto& t = state.tasks[i];
  out[0] = scale(d.position.x, 0.0, cfg.area_m);
  out[1] = scale(d.position.y, 0.0, cfg.area_m);
  // Task sizes are token counts times per-token constants.
  out[2] = scale(safe_log(t.d_bits / cfg.bits_per_token), 0.0, log_tokens_hi_);
  out[3] = scale(safe_log(t.f_md / cfg.draft_flops_per_token), 0.0, log_tokens_hi_);
  out[4] = scale(safe_log(t.f_es / cfg.verify_flops_per_token), 0.0, log_tokens_hi_);
  out[5] = scale(d.battery, 0.0, 1.0);
  out[6] = scale(d.tx_power_w, mec::dbm_to_watts(cfg.tx_power_min_dbm), mec::dbm_to_watts(cfg.tx_power_max_dbm));
  out[7] = scale(safe_log(d.local_flops), log_dev_flops_lo_, log_dev_flops_hi_);
}

Matrix FeatureScaler::agent_observations(const mec::EnvState& state, double w) const {
  require(state.num_devices() == m_ && state.num_servers() == e_, "FeatureScaler: state size mismatch");
  const auto& cfg = *cfg_;
  Matrix obs(agent_obs_size(), e_);
  std::vector<double> common(kDeviceCommon * m_);
  for (int i = 0; i < m_; ++i) device_common(state, i, common.data() + kDeviceCommon * i);
  const double slot = cfg.slots > 1 ? scale(state.slot, 0.0, cfg.slots - 1) : 0.0;
  for (int j = 0; j < e_; ++j) {
    const auto& s = state.servers[j];
    int r = 0;
    obs(r++, j) = scale(s.position.x, 0.0, cfg.area_m);
    obs(r++, j) = scale(s.position.y, 0.0, cfg.area_m);
    obs(r++, j) = scale(safe_log(s.flops), log_srv_flops_lo_, log_srv_flops_hi_);
    obs(r++, j) = scale(s.queue_slots, 0.0, queue_hi_);
    for (int k = 0; k < e_; ++k) obs(r++, j) = k == j ? 1.0 : -1.0;
    for (int i = 0; i < m_; ++i) {
      for (int c = 0; c < kDeviceCommon; ++c) obs(r++, j) = common[kDeviceCommon * i + c];
      obs(r++, j) = scale(safe_log(state.channel.h(i, j)), log_gain_lo_, log_gain_hi_);
    }
    obs(r++, j) = slot;
    obs(r++, j) = weight_feature(w);
  }
  return obs;
}

Vector FeatureScaler::global_state(const mec::EnvState& state, double w) const {
  require(state.num_devices() == m_ && state.num_servers() == e_, "FeatureScaler: state size mismatch");
  const auto& cfg = *cfg_;
  Vector s(state_size());
  int r = 0;
  for (const auto& srv : state.servers) {
    s[r++] = scale(srv.position.x, 0.0, cfg.area_m);
    s[r++] = scale(srv.position.y, 0.0, cfg.area_m);
    s[r++] = scale(safe_log(srv.flops), log_srv_flops_lo_, log_srv_flops_hi_);
    s[r++] = scale(srv.queue_slots, 0.0, queue_hi_);
  }
  for (int i = 0; i < m_; ++i) {
    device_common(state, i, s.data() + r);
    r += kDeviceCommon;
    for (int j = 0; j < e_; ++j) s[r++] = scale(safe_log(state.channel.h(i, j)), log_gain_lo_, log_gain_hi_);
  }
  s[r++] = cfg.slots > 1 ? scale(state.slot, 0.0, cfg.slots - 1) : 0.0;
  s[r++] = weight_feature(w);
  return s;
}

void split_actions(const Matrix& actions, Matrix& raw_y, Matrix& raw_z) {
  require(actions.rows() % 2 == 0, "split_actions: expected 2M rows");
  const auto m = actions.rows() / 2;
  raw_y = actions.topRows(m);
  raw_z = actions.bottomRows(m);
}

mec::Allocation allocation_from_actions(const Matrix& actions, const mec::EnvState& state, double lambda, double w,
                                        tma::TmaResult* trace) {
  require(actions.rows() == 2 * state.num_devices() && actions.cols() == state.num_servers(),
          "allocation_from_actions: actions must be 2M x E");
  Matrix raw_y, raw_z;
  split_actions(actions, raw_y, raw_z);
  tma::TmaResult r = tma::tma(raw_y, raw_z, state, {lambda, w});
  mec::Allocation a = project_actions(raw_y, raw_z, r.x);
  if (trace) *trace = std::move(r);
  return a;
}

double baseline_objective(const mec::EnvState& state, double lambda, double w) {
  Rng rng(hash_combine(stream_seed(state.seed, "baseline"), std::uint64_t(state.slot)));
  return mec::objective(state, baselines::uniform_alloc(baselines::random_assoc(state, rng)), lambda, w);
}

mec::Allocation act(const mec::EnvState& state, const Masac& model, const FeatureScaler& scaler, double w, Rng& rng,
                    bool deterministic, tma::TmaResult* trace) {
  const Matrix actions = model.act(scaler.agent_observations(state, w), rng, deterministic);
  return allocation_from_actions(actions, state, state.config->lambda, w, trace);
}

MecEnvironment::MecEnvironment(std::shared_ptr<const mec::ScenarioConfig> config, std::vector<double> weight_choices)
    : config_(std::move(config)),
      weight_choices_(std::move(weight_choices)),
      scaler_(*config_, weight_range(weight_choices_)),
      w_(config_->w) {
  for (double w : weight_choices_) require(w >= 0.0, "MecEnvironment: weights must be non-negative");
  reset(0);
}

void MecEnvironment::reset(std::uint64_t seed) {
  state_ = mec::make_initial_state(config_, seed);
  rng_ = make_stream(seed, "env");
  if (!weight_choices_.empty()) {
    Rng pick = make_stream(seed, "weight");
    w_ = weight_choices_[std::uniform_int_distribution<std::size_t>(0, weight_choices_.size() - 1)(pick)];
  } else {
    w_ = config_->w;
  }
}

Observation MecEnvironment::observe() const {
  return {scaler_.agent_observations(state_, w_), scaler_.global_state(state_, w_)};
}

StepOutcome MecEnvironment::step(const Matrix& actions) {
  const double lambda = config_->lambda;
  last_.allocation = allocation_from_actions(actions, state_, lambda, w_);
  last_.report = mec::evaluate(state_, last_.allocation, lambda, w_);
  last_.baseline = baseline_objective(state_, lambda, w_);
  last_.reward = reward(last_.report.value, last_.baseline);
  for (int i = 0; i < state_.num_devices(); ++i) state_.last_energy_j[i] = last_.report.devices[i].energy.total();
  const bool done = state_.slot + 1 >= config_->slots;
  if (!done) state_ = mec::step_env(state_, rng_);
  return {last_.reward, done};
}

}  // namespace edgespec::masac
