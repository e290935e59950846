#include "edgespec/masac/replay.hpp"

#include "edgespec/common/error.hpp"

namespace edgespec::masac {

ReplayBuffer::ReplayBuffer(int capacity, int obs_size, int state_size, int action_size)
    : capacity_(capacity),
      obs_(obs_size, capacity),
      state_(state_size, capacity),
      action_(action_size, capacity),
      next_obs_(obs_size, capacity),
      next_state_(state_size, capacity),
      reward_(capacity),
      done_(capacity) {
  require(capacity > 0, "ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::add(const Transition& t) {
  require(t.obs.size() == obs_.rows() && t.next_obs.size() == obs_.rows() && t.state.size() == state_.rows() &&
              t.next_state.size() == state_.rows() && t.action.size() == action_.rows(),
          "ReplayBuffer::add: transition shape mismatch");
  obs_.col(next_) = t.obs;
  state_.col(next_) = t.state;
  action_.col(next_) = t.action;
  next_obs_.col(next_) = t.next_obs;
  next_state_.col(next_) = t.next_state;
  reward_[next_] = t.reward;
  done_[next_] = t.done ? 1.0 : 0.0;
  next_ = (next_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

std::vector<int> ReplayBuffer::sample_indices(int batch, Rng& rng) const {
  require(size_ > 0, "ReplayBuffer::sample: buffer is empty");
  require(batch > 0, "ReplayBuffer::sample: batch must be positive");
  std::uniform_int_distribution<int> pick(0, size_ - 1);
  std::vector<int> idx(batch);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

Batch ReplayBuffer::gather(const std::vector<int>& indices) const {
  const auto n = Eigen::Index(indices.size());
  Batch b{Matrix(obs_.rows(), n),  Matrix(state_.rows(), n),      Matrix(action_.rows(), n), Eigen::RowVectorXd(n),
          Matrix(obs_.rows(), n),  Matrix(state_.rows(), n),      Eigen::RowVectorXd(n)};
  for (Eigen::Index c = 0; c < n; ++c) {
    const int i = indices[c];
    require(i >= 0 && i < size_, "ReplayBuffer::gather: index out of range");
    b.obs.col(c) = obs_.col(i);
    b.state.col(c) = state_.col(i);
    b.action.col(c) = action_.col(i);
    b.reward[c] = reward_[i];
    b.next_obs.col(c) = next_obs_.col(i);
    b.next_state.col(c) = next_state_.col(i);
    b.done[c] = done_[i];
  }
  return b;
}

}  // namespace edgespec::masac
