#include "edgespec/masac/sac.hpp"

#include <cmath>
#include <sstream>

#include "edgespec/common/error.hpp"

namespace edgespec::masac {

void SacConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("sac: " + what);
  };
  check(alpha >= 0.0, "alpha must be >= 0");
  check(beta >= 0.0 && beta < 1.0, "beta must lie in [0, 1)");
  check(xi > 0.0 && xi <= 1.0, "xi must lie in (0, 1]");
  check(lr_actor >= 0.0 && lr_critic >= 0.0, "learning rates must be >= 0");
  check(batch_size > 0, "batch_size must be positive");
  check(warmup_steps >= 0, "warmup_steps must be >= 0");
  check(replay_capacity > 0, "replay_capacity must be positive");
  check(updates_per_step >= 0, "updates_per_step must be >= 0");
  check(!hidden.empty(), "hidden must list at least one layer");
  for (int h : hidden) check(h > 0, "hidden sizes must be positive");
  check(log_std.lo < log_std.hi, "log_std bounds must satisfy lo < hi");
  check(max_grad_norm >= 0.0, "max_grad_norm must be >= 0");
  check(divergence_limit > 0.0, "divergence_limit must be positive");
}

nlohmann::json sac_to_json(const SacConfig& c) {
  return {{"alpha", c.alpha},
          {"beta", c.beta},
          {"xi", c.xi},
          {"lr_actor", c.lr_actor},
          {"lr_critic", c.lr_critic},
          {"batch_size", c.batch_size},
          {"warmup_steps", c.warmup_steps},
          {"replay_capacity", c.replay_capacity},
          {"updates_per_step", c.updates_per_step},
          {"hidden", c.hidden},
          {"twin_critic", c.twin_critic},
          {"share_policy", c.share_policy},
          {"max_grad_norm", c.max_grad_norm},
          {"log_std_min", c.log_std.lo},
          {"log_std_max", c.log_std.hi},
          {"divergence_limit", c.divergence_limit}};
}

SacConfig sac_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("sac: expected an object");
  SacConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "alpha") c.alpha = v.get<double>();
      else if (key == "beta") c.beta = v.get<double>();
      else if (key == "xi") c.xi = v.get<double>();
      else if (key == "lr_actor") c.lr_actor = v.get<double>();
      else if (key == "lr_critic") c.lr_critic = v.get<double>();
      else if (key == "batch_size") c.batch_size = v.get<int>();
      else if (key == "warmup_steps") c.warmup_steps = v.get<int>();
      else if (key == "replay_capacity") c.replay_capacity = v.get<int>();
      else if (key == "updates_per_step") c.updates_per_step = v.get<int>();
      else if (key == "hidden") c.hidden = v.get<std::vector<int>>();
      else if (key == "twin_critic") c.twin_critic = v.get<bool>();
      else if (key == "share_policy") c.share_policy = v.get<bool>();
      else if (key == "max_grad_norm") c.max_grad_norm = v.get<double>();
      else if (key == "log_std_min") c.log_std.lo = v.get<double>();
      else if (key == "log_std_max") c.log_std.hi = v.get<double>();
      else if (key == "divergence_limit") c.divergence_limit = v.get<double>();
      else throw ConfigError("sac: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("sac: ") + e.what());
  }
  c.validate();
  return c;
}

Matrix critic_input(const Matrix& state, const Matrix& joint_action) {
  require(state.cols() == joint_action.cols(), "critic_input: batch size mismatch");
  Matrix in(state.rows() + joint_action.rows(), state.cols());
  in.topRows(state.rows()) = state;
  in.bottomRows(joint_action.rows()) = (2.0 * joint_action.array() - 1.0).matrix();
  return in;
}

ActionValueFn critic_value(const Mlp& critic, int state_rows) {
  return [&critic, state_rows](const Matrix& state, const Matrix& action, Matrix* dq_da) {
    Mlp::Cache cache;
    const Matrix q = critic.forward(critic_input(state, action), dq_da ? &cache : nullptr);
    if (dq_da) {
      Vector unused;
      const Matrix din = critic.backward(cache, Matrix::Ones(1, state.cols()), unused);
      *dq_da = 2.0 * din.bottomRows(din.rows() - state_rows);
    }
    return Eigen::RowVectorXd(q.row(0));
  };
}

ActionValueFn min_critic_value(const std::vector<Mlp>& critics, int state_rows) {
  require(!critics.empty(), "min_critic_value: no critics");
  if (critics.size() == 1) return critic_value(critics[0], state_rows);
  return [&critics, state_rows](const Matrix& state, const Matrix& action, Matrix* dq_da) {
    Eigen::RowVectorXd best;
    Matrix best_grad;
    for (std::size_t k = 0; k < critics.size(); ++k) {
      Matrix grad;
      const Eigen::RowVectorXd q = critic_value(critics[k], state_rows)(state, action, dq_da ? &grad : nullptr);
      if (k == 0) {
        best = q;
        best_grad = grad;
        continue;
      }
      for (Eigen::Index b = 0; b < q.size(); ++b) {
        if (q[b] < best[b]) {
          best[b] = q[b];
          if (dq_da) best_grad.col(b) = grad.col(b);
        }
      }
    }
    if (dq_da) *dq_da = best_grad;
    return best;
  };
}

double reward(double objective, double baseline) {
  require(baseline > 0.0, "reward: baseline objective must be positive");
  return -objective / baseline;
}

CriticLoss critic_loss(const Mlp& critic, const Matrix& state, const Matrix& joint_action,
                       const Eigen::RowVectorXd& target) {
  Mlp::Cache cache;
  const Matrix q = critic.forward(critic_input(state, joint_action), &cache);
  const Eigen::RowVectorXd err = q.row(0) - target;
  const double n = double(target.size());
  CriticLoss out;
  out.loss = 0.5 * err.squaredNorm() / n;
  out.grad = Vector::Zero(critic.num_params());
  critic.backward(cache, err / n, out.grad);
  return out;
}

namespace {

const PolicyHead& head_for(const std::vector<PolicyHead>& heads, int agent) {
  return heads.size() == 1 ? heads[0] : heads[agent];
}

}  // namespace

JointSample joint_sample(const std::vector<PolicyHead>& heads, const AgentDims& dims, const Matrix& obs,
                         const std::vector<Matrix>& noise) {
  require(int(noise.size()) == dims.agents, "joint_sample: one noise block per agent");
  require(obs.rows() == Eigen::Index(dims.agents) * dims.obs, "joint_sample: obs rows mismatch");
  JointSample js;
  js.action.resize(Eigen::Index(dims.agents) * dims.action, obs.cols());
  js.log_prob = Eigen::RowVectorXd::Zero(obs.cols());
  for (int j = 0; j < dims.agents; ++j) {
    js.parts.push_back(
        policy_sample(head_for(heads, j), obs.middleRows(Eigen::Index(j) * dims.obs, dims.obs), noise[j]));
    js.action.middleRows(Eigen::Index(j) * dims.action, dims.action) = js.parts.back().action;
    js.log_prob += js.parts.back().log_prob;
  }
  return js;
}

PolicyLoss policy_loss(const std::vector<PolicyHead>& heads, const AgentDims& dims, const Matrix& obs,
                       const Matrix& state, const std::vector<Matrix>& noise, const ActionValueFn& q,
                       double alpha) {
  const JointSample js = joint_sample(heads, dims, obs, noise);
  Matrix dq_da;
  const Eigen::RowVectorXd qv = q(state, js.action, &dq_da);
  const double n = double(obs.cols());
  PolicyLoss out;
  out.loss = (alpha * js.log_prob - qv).sum() / n;
  out.entropy = -js.log_prob.sum() / n;
  for (const auto& h : heads) out.grads.push_back(Vector::Zero(h.net.num_params()));
  const Eigen::RowVectorXd dlogp = Eigen::RowVectorXd::Constant(obs.cols(), alpha / n);
  for (int j = 0; j < dims.agents; ++j) {
    const Matrix da = -dq_da.middleRows(Eigen::Index(j) * dims.action, dims.action) / n;
    const std::size_t slot = heads.size() == 1 ? 0 : std::size_t(j);
    policy_backward(heads[slot], js.parts[j], da, dlogp, out.grads[slot]);
  }
  return out;
}

Eigen::RowVectorXd critic_targets(const Batch& batch, const std::vector<PolicyHead>& heads, const AgentDims& dims,
                                  const ActionValueFn& target_q, double alpha, double beta,
                                  const std::vector<Matrix>& noise) {
  if (beta == 0.0) return batch.reward;
  const JointSample next = joint_sample(heads, dims, batch.next_obs, noise);
  const Eigen::RowVectorXd q = target_q(batch.next_state, next.action, nullptr);
  const Eigen::RowVectorXd soft = q - alpha * next.log_prob;
  return batch.reward.array() + beta * (1.0 - batch.done.array()) * soft.array();
}

Masac::Masac(AgentDims dims, SacConfig cfg, Rng& init_rng) : dims_(dims), cfg_(std::move(cfg)) {
  cfg_.validate();
  const int policy_count = cfg_.share_policy ? 1 : dims_.agents;
  for (int j = 0; j < policy_count; ++j)
    policies_.push_back({Mlp(policy_sizes(), init_rng, 0.1), cfg_.log_std});
  const int critic_count = cfg_.twin_critic ? 2 : 1;
  for (int k = 0; k < critic_count; ++k) critics_.emplace_back(critic_sizes(), init_rng);
  targets_ = critics_;
  init_optimizers();
}

Masac::Masac(AgentDims dims, SacConfig cfg, const std::vector<Vector>& policy_params,
             const std::vector<Vector>& critic_params, const std::vector<Vector>& target_params)
    : dims_(dims), cfg_(std::move(cfg)) {
  cfg_.validate();
  require(policy_params.size() == std::size_t(cfg_.share_policy ? 1 : dims_.agents),
          "Masac: wrong number of policy parameter sets");
  require(critic_params.size() == std::size_t(cfg_.twin_critic ? 2 : 1) &&
              target_params.size() == critic_params.size(),
          "Masac: wrong number of critic parameter sets");
  for (const auto& p : policy_params) policies_.push_back({Mlp(policy_sizes(), p), cfg_.log_std});
  for (const auto& p : critic_params) critics_.emplace_back(critic_sizes(), p);
  for (const auto& p : target_params) targets_.emplace_back(critic_sizes(), p);
  init_optimizers();
}

void Masac::init_optimizers() {
  policy_opt_.clear();
  critic_opt_.clear();
  for (const auto& p : policies_) policy_opt_.emplace_back(p.net.num_params(), cfg_.lr_actor, cfg_.max_grad_norm);
  for (const auto& c : critics_) critic_opt_.emplace_back(c.num_params(), cfg_.lr_critic, cfg_.max_grad_norm);
}

std::vector<int> Masac::policy_sizes() const {
  std::vector<int> s{dims_.obs};
  s.insert(s.end(), cfg_.hidden.begin(), cfg_.hidden.end());
  s.push_back(2 * dims_.action);
  return s;
}

std::vector<int> Masac::critic_sizes() const {
  std::vector<int> s{dims_.state + dims_.agents * dims_.action};
  s.insert(s.end(), cfg_.hidden.begin(), cfg_.hidden.end());
  s.push_back(1);
  return s;
}

const PolicyHead& Masac::policy(int agent) const {
  require(agent >= 0 && agent < dims_.agents, "Masac::policy: agent out of range");
  return head_for(policies_, agent);
}

Matrix Masac::act(const Matrix& obs, Rng& rng, bool deterministic) const {
  require(obs.rows() == dims_.obs && obs.cols() == dims_.agents, "Masac::act: obs must be obs x agents");
  Matrix actions(dims_.action, dims_.agents);
  for (int j = 0; j < dims_.agents; ++j) {
    const PolicyHead& h = policy(j);
    actions.col(j) = deterministic ? policy_mode(h, obs.col(j)) : policy_sample(h, obs.col(j), rng).action;
  }
  return actions;
}

std::vector<Matrix> Masac::draw_noise(Eigen::Index batch, Rng& rng) const {
  std::vector<Matrix> noise;
  for (int j = 0; j < dims_.agents; ++j) noise.push_back(standard_normal(dims_.action, batch, rng));
  return noise;
}

namespace {

void check_finite(const Vector& grad, double loss, const char* what) {
  if (grad.allFinite() && std::isfinite(loss)) return;
  std::ostringstream msg;
  msg << what << " update produced a non-finite " << (std::isfinite(loss) ? "gradient" : "loss")
      << " (loss=" << loss << ", |grad|=" << grad.norm() << ")";
  throw TrainingError(msg.str());
}

}  // namespace

double Masac::critic_update(const Batch& batch, Rng& rng) {
  const auto noise = draw_noise(batch.obs.cols(), rng);
  const Eigen::RowVectorXd y =
      critic_targets(batch, policies_, dims_, min_critic_value(targets_, dims_.state), cfg_.alpha, cfg_.beta, noise);
  double total = 0.0;
  for (std::size_t k = 0; k < critics_.size(); ++k) {
    const CriticLoss l = critic_loss(critics_[k], batch.state, batch.action, y);
    check_finite(l.grad, l.loss, "critic");
    critic_opt_[k].step(critics_[k].params(), l.grad);
    total += l.loss;
  }
  return total / double(critics_.size());
}

PolicyLoss Masac::policy_update(const Batch& batch, Rng& rng) {
  const auto noise = draw_noise(batch.obs.cols(), rng);
  PolicyLoss l = policy_loss(policies_, dims_, batch.obs, batch.state, noise,
                             min_critic_value(critics_, dims_.state), cfg_.alpha);
  for (std::size_t j = 0; j < policies_.size(); ++j) {
    check_finite(l.grads[j], l.loss, "policy");
    policy_opt_[j].step(policies_[j].net.params(), l.grads[j]);
  }
  return l;
}

void Masac::soft_update_targets() {
  for (std::size_t k = 0; k < critics_.size(); ++k)
    soft_update(critics_[k].params(), targets_[k].params(), cfg_.xi);
}

UpdateStats Masac::update(const Batch& batch, Rng& rng) {
  UpdateStats s;
  s.critic_loss = critic_update(batch, rng);
  const PolicyLoss p = policy_update(batch, rng);
  s.policy_loss = p.loss;
  s.entropy = p.entropy;
  soft_update_targets();
  return s;
}

}  // namespace edgespec::masac
