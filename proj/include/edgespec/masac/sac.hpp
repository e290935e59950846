#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "json.hpp"

#include "edgespec/masac/policy.hpp"
#include "edgespec/masac/replay.hpp"

namespace edgespec::masac {

struct SacConfig {
  double alpha = 0.2;   // entropy temperature
  double beta = 0.99;   // discount
  double xi = 0.005;    // target smoothing
  double lr_actor = 3e-4;
  double lr_critic = 3e-4;
  int batch_size = 128;
  int warmup_steps = 1000;
  int replay_capacity = 100000;
  int updates_per_step = 1;
  std::vector<int> hidden = {128, 128};
  bool twin_critic = false;
  bool share_policy = false;
  double max_grad_norm = 0.0;  // 0 disables clipping
  LogStdBounds log_std;
  double divergence_limit = 1e6;

  void validate() const;
};

nlohmann::json sac_to_json(const SacConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
SacConfig sac_from_json(const nlohmann::json& j);

struct AgentDims {
  int agents = 1;
  int obs = 1;     // per agent
  int state = 1;   // critic's view of the global state
  int action = 1;  // per agent
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Q for a batch; fills dq_da (joint action rows x batch) when non-null.
using ActionValueFn = std::function<Eigen::RowVectorXd(const Matrix& state, const Matrix& joint_action, Matrix* dq_da)>;

/// Critic input: state stacked over the action rescaled to [-1, 1].
Matrix critic_input(const Matrix& state, const Matrix& joint_action);
ActionValueFn critic_value(const Mlp& critic, int state_rows);
/// Elementwise minimum over the critics (a single critic passes through).
ActionValueFn min_critic_value(const std::vector<Mlp>& critics, int state_rows);

/// -objective / baseline, so halving the objective relative to the baseline
/// moves the reward from -1 to -0.5.
double reward(double objective, double baseline);

struct CriticLoss {
  double loss = 0.0;
  Vector grad;
};

/// 0.5 * mean (Q(s, a) - target)^2 and its gradient.
CriticLoss critic_loss(const Mlp& critic, const Matrix& state, const Matrix& joint_action,
                       const Eigen::RowVectorXd& target);

struct PolicyLoss {
  double loss = 0.0;
  double entropy = 0.0;  // mean of -sum_j log pi_j
  std::vector<Vector> grads;  // one per parameter set
};

/// Joint sample from every agent's head. heads holds one entry, shared by
/// all agents, or one per agent; noise holds one A x B block per agent.
struct JointSample {
  Matrix action;               // agents*A x B
  Eigen::RowVectorXd log_prob; // summed over agents
  std::vector<PolicySample> parts;
};
JointSample joint_sample(const std::vector<PolicyHead>& heads, const AgentDims& dims, const Matrix& obs,
                         const std::vector<Matrix>& noise);

/// mean(alpha * sum_j log pi_j(a_j|o_j) - Q(s, a)) with reparameterised
/// actions and its gradient for each parameter set.
PolicyLoss policy_loss(const std::vector<PolicyHead>& heads, const AgentDims& dims, const Matrix& obs,
                       const Matrix& state, const std::vector<Matrix>& noise, const ActionValueFn& q,
                       double alpha);

/// r + beta * (1 - done) * (Q_target(s', a') - alpha * log pi(a'|s')),
/// a' drawn from the current policies with the given noise.
Eigen::RowVectorXd critic_targets(const Batch& batch, const std::vector<PolicyHead>& heads, const AgentDims& dims,
                                  const ActionValueFn& target_q, double alpha, double beta,
                                  const std::vector<Matrix>& noise);

struct UpdateStats {
  double critic_loss = 0.0;
  double policy_loss = 0.0;
  double entropy = 0.0;
};

/// One actor per agent (or one shared), centralised critic(s) over the
/// global state and joint action, target critics tracked by Polyak averaging.
class Masac {
 public:
  Masac(AgentDims dims, SacConfig cfg, Rng& init_rng);
  /// Restores a learner from parameter vectors (layout as Mlp::params()).
  Masac(AgentDims dims, SacConfig cfg, const std::vector<Vector>& policy_params,
        const std::vector<Vector>& critic_params, const std::vector<Vector>& target_params);

  const AgentDims& dims() const { return dims_; }
  const SacConfig& config() const { return cfg_; }
  const std::vector<PolicyHead>& policies() const { return policies_; }
  const std::vector<Mlp>& critics() const { return critics_; }
  const std::vector<Mlp>& target_critics() const { return targets_; }
  const PolicyHead& policy(int agent) const;

  /// obs: obs x agents. Returns action x agents in [0, 1].
  Matrix act(const Matrix& obs, Rng& rng, bool deterministic) const;

  double critic_update(const Batch& batch, Rng& rng);
  PolicyLoss policy_update(const Batch& batch, Rng& rng);
  void soft_update_targets();
  UpdateStats update(const Batch& batch, Rng& rng);

  std::vector<int> policy_sizes() const;
  std::vector<int> critic_sizes() const;

 private:
  void init_optimizers();
  std::vector<Matrix> draw_noise(Eigen::Index batch, Rng& rng) const;

  AgentDims dims_;
  SacConfig cfg_;
  std::vector<PolicyHead> policies_;
  std::vector<Mlp> critics_;
  std::vector<Mlp> targets_;
  std::vector<Adam> policy_opt_;
  std::vector<Adam> critic_opt_;
};

}  // namespace edgespec::masac
