#pragma once

#include <vector>

#include "edgespec/masac/mlp.hpp"

namespace edgespec::masac {

/// Joint transition. obs and action stack the agents' vectors in agent order.
struct Transition {
  Vector obs;
  Vector state;
  Vector action;
  double reward = 0.0;
  Vector next_obs;
  Vector next_state;
  bool done = false;
};

/// Mini-batch, one transition per column.
struct Batch {
  Matrix obs;
  Matrix state;
  Matrix action;
  Eigen::RowVectorXd reward;
  Matrix next_obs;
  Matrix next_state;
  Eigen::RowVectorXd done;
};

/// Fixed-capacity ring; the oldest transition is overwritten once full.
class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, int obs_size, int state_size, int action_size);

  void add(const Transition& t);
  int size() const { return size_; }
  int capacity() const { return capacity_; }

  /// Uniform draw with replacement.
  std::vector<int> sample_indices(int batch, Rng& rng) const;
  Batch gather(const std::vector<int>& indices) const;
  Batch sample(int batch, Rng& rng) const { return gather(sample_indices(batch, rng)); }

 private:
  int capacity_;
  int size_ = 0;
  int next_ = 0;
  Matrix obs_, state_, action_, next_obs_, next_state_;
  Eigen::RowVectorXd reward_, done_;
};

}  // namespace edgespec::masac
