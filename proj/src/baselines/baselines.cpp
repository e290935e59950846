#include "edgespec/baselines/baselines.hpp"

#include "edgespec/common/error.hpp"

namespace edgespec::baselines {

namespace {

Matrix one_hot_rows(const std::vector<int>& server_of, int servers) {
  Matrix x = Matrix::Zero(static_cast<Eigen::Index>(server_of.size()), servers);
  for (std::size_t i = 0; i < server_of.size(); ++i) x(static_cast<Eigen::Index>(i), server_of[i]) = 1.0;
  return x;
}

}  // namespace

Matrix random_assoc(const mec::EnvState& state, Rng& rng) {
  const int e = state.num_servers();
  require(e > 0, "random_assoc: no servers");
  std::uniform_int_distribution<int> pick(0, e - 1);
  std::vector<int> server_of(state.num_devices());
  for (auto& s : server_of) s = pick(rng);
  return one_hot_rows(server_of, e);
}

Matrix max_sinr_assoc(const mec::EnvState& state, const SinrOptions& options) {
  const int m = state.num_devices();
  const int e = state.num_servers();
  require(e > 0, "max_sinr_assoc: no servers");
  const Matrix& h = state.channel.h;
  const double n0 = state.channel.noise_psd_w_hz;
  std::vector<int> server_of(m, 0);
  for (int i = 0; i < m; ++i) {
    const double total = h.row(i).squaredNorm();
    double best = -1.0;
    for (int j = 0; j < e; ++j) {
      const double g = h(i, j) * h(i, j);
      const double interference = options.reference_power_w * (total - g);
      const double score = g * state.devices[i].tx_power_w /
                           (n0 * state.servers[j].bandwidth_hz + interference);
      if (score > best) {
        best = score;
        server_of[i] = j;
      }
    }
  }
  return one_hot_rows(server_of, e);
}

Matrix max_compute_assoc(const mec::EnvState& state) {
  const int e = state.num_servers();
  require(e > 0, "max_compute_assoc: no servers");
  int fastest = 0;
  for (int j = 1; j < e; ++j) {
    if (state.servers[j].flops > state.servers[fastest].flops) fastest = j;
  }
  return one_hot_rows(std::vector<int>(state.num_devices(), fastest), e);
}

mec::Allocation uniform_alloc(const Matrix& x) {
  mec::Allocation a{x, Matrix::Zero(x.rows(), x.cols()), Matrix::Zero(x.rows(), x.cols())};
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double n = x.col(j).sum();
    if (n == 0.0) continue;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (x(i, j) == 1.0) a.y(i, j) = a.z(i, j) = 1.0 / n;
    }
  }
  return a;
}

std::string to_string(Policy policy) {
  switch (policy) {
    case Policy::random: return "random";
    case Policy::max_sinr: return "max_sinr";
    case Policy::max_compute: return "max_compute";
    case Policy::tma_masac: return "tma_masac";
  }
  return "?";
}

Policy policy_from_string(const std::string& name) {
  for (Policy p : {Policy::random, Policy::max_sinr, Policy::max_compute, Policy::tma_masac}) {
    if (to_string(p) == name) return p;
  }
  throw ConfigError("unknown policy '" + name + "' (expected random, max_sinr, max_compute or tma_masac)");
}

}  // namespace edgespec::baselines
