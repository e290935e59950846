#pragma once

#include <string>

#include "edgespec/common/rng.hpp"
#include "edgespec/mec/types.hpp"

namespace edgespec::baselines {

using mec::Matrix;

/// Every device picks a server uniformly at random.
Matrix random_assoc(const mec::EnvState& state, Rng& rng);

struct SinrOptions {
  /// Pilot power each server is heard at; the other servers' pilots are the
  /// interference in the score. Zero turns the score into plain SNR.
  double reference_power_w = 0.2;
};

/// score_ij = h_ij^2 P_i / (N0 W_j + P_ref * sum_{k != j} h_ik^2), row argmax.
/// The score is only used to pick servers; rates stay interference-free.
Matrix max_sinr_assoc(const mec::EnvState& state, const SinrOptions& options = {});

/// Every device picks the server with the most FLOPS, lowest id on ties.
Matrix max_compute_assoc(const mec::EnvState& state);

/// Each server splits bandwidth and compute evenly over its devices.
mec::Allocation uniform_alloc(const Matrix& x);

enum class Policy { random, max_sinr, max_compute, tma_masac };

std::string to_string(Policy policy);
Policy policy_from_string(const std::string& name);

}  // namespace edgespec::baselines
