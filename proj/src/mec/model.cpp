#include "edgespec/mec/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "edgespec/common/error.hpp"

namespace edgespec::mec {

double distance(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

const char* to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::code: return "code";
    case TaskKind::summarize: return "summarize";
    case TaskKind::chat: return "chat";
  }
  return "unknown";
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double path_gain(double distance_m, const PathLossParams& pl, double fade) {
  require(pl.d0_m > 0.0, "path_gain: reference distance must be > 0");
  require(fade >= 0.0, "path_gain: fade must be >= 0");
  const double d = std::max(distance_m, 1.0);
  const double loss_db = pl.pl0_db + 10.0 * pl.exponent * std::log10(d / pl.d0_m);
  return std::pow(10.0, -loss_db / 10.0) * fade;
}

double rayleigh_power_fade(Rng& rng) { return -std::log1p(-uniform01(rng)); }

double path_gain(const MobileDevice& device, const EdgeServer& server, const PathLossParams& pl,
                 Rng& rng) {
  const double fade = pl.fading ? rayleigh_power_fade(rng) : 1.0;
  return path_gain(distance(device.position, server.position), pl, fade);
}

Matrix channel_gains(const EnvState& state) {
  const auto& cfg = *state.config;
  const std::uint64_t base = hash_combine(stream_seed(state.seed, "channel"),
                                          static_cast<std::uint64_t>(state.slot));
  Matrix h(state.num_devices(), state.num_servers());
  for (int i = 0; i < state.num_devices(); ++i) {
    for (int j = 0; j < state.num_servers(); ++j) {
      Rng pair_rng(hash_combine(hash_combine(base, static_cast<std::uint64_t>(i)),
                                static_cast<std::uint64_t>(j)));
      h(i, j) = path_gain(state.devices[i], state.servers[j], cfg.path_loss, pair_rng);
    }
  }
  return h;
}

double snr(double h, double power_w, double noise_psd, double band_hz, SnrMode mode) {
  require(h >= 0.0, "snr: gain must be >= 0");
  require(power_w > 0.0, "snr: transmit power must be > 0");
  require(noise_psd > 0.0, "snr: noise density must be > 0");
  const double signal = h * h * power_w;
  if (mode == SnrMode::psd_literal) return signal / noise_psd;
  require(band_hz > 0.0, "snr: band must be > 0 in full_band mode");
  return signal / (noise_psd * band_hz);
}

Matrix snr_matrix(const EnvState& state) {
  const auto& cfg = *state.config;
  Matrix out(state.num_devices(), state.num_servers());
  for (int i = 0; i < state.num_devices(); ++i) {
    for (int j = 0; j < state.num_servers(); ++j) {
      out(i, j) = snr(state.channel.h(i, j), state.devices[i].tx_power_w,
                      state.channel.noise_psd_w_hz, state.servers[j].bandwidth_hz, cfg.snr_mode);
    }
  }
  return out;
}

double spectral_efficiency(double snr_value, LogBase base) {
  const double nats = std::log1p(snr_value);
  return base == LogBase::two ? nats / std::numbers::ln2 : nats;
}

double data_rate(const Allocation& alloc, const std::vector<double>& band_hz, const Matrix& snr,
                 int device, LogBase base) {
  double rate = 0.0;
  for (Eigen::Index j = 0; j < alloc.x.cols(); ++j) {
    const double share = alloc.x(device, j) * alloc.y(device, j);
    if (share == 0.0) continue;
    rate += share * band_hz[j] * spectral_efficiency(snr(device, j), base);
  }
  return rate;
}

double local_delay(double f_md, double device_flops) {
  require(device_flops > 0.0, "local_delay: device FLOPS must be > 0");
  require(f_md >= 0.0, "local_delay: workload must be >= 0");
  return f_md / device_flops;
}

double remote_delay(double f_es, double z, double server_flops, int queue_slots, double kappa_s) {
  require(server_flops > 0.0, "remote_delay: server FLOPS must be > 0");
  require(queue_slots >= 0, "remote_delay: queue length must be >= 0");
  require(z >= 0.0 && z <= 1.0, "remote_delay: z outside [0, 1]");
  const double wait = queue_slots * kappa_s;
  if (f_es == 0.0) return wait;
  if (z == 0.0) {
    throw InfeasibleAllocation({{"compute_share", -1, -1, 0.0, false}});
  }
  return wait + f_es / (z * server_flops);
}

EnergyTerms energy(const MobileDevice& device, const Task& task, const Allocation& alloc,
                   const std::vector<double>& band_hz, const EnergyCoefficients& coeff) {
  EnergyTerms e;
  e.compute = coeff.delta_cp * task.f_md / coeff.flop_unit;
  double band = 0.0;
  for (Eigen::Index j = 0; j < alloc.x.cols(); ++j) {
    band += alloc.x(device.id, j) * alloc.y(device.id, j) * band_hz[j];
  }
  e.communication = coeff.delta_cm * (band / coeff.bandwidth_unit_hz) * device.tx_power_w;
  return e;
}

std::string Violation::describe() const {
  std::ostringstream os;
  os << constraint;
  if (extension) os << " (extension)";
  if (device >= 0) os << " device " << device;
  if (server >= 0) os << " server " << server;
  os << " magnitude " << magnitude;
  return os.str();
}

namespace {

std::string summarize(const std::vector<Violation>& v) {
  std::ostringstream os;
  os << "infeasible allocation: " << v.size() << " violation(s)";
  for (std::size_t k = 0; k < v.size() && k < 4; ++k) os << "; " << v[k].describe();
  return os.str();
}

}  // namespace

InfeasibleAllocation::InfeasibleAllocation(std::vector<Violation> violations)
    : std::invalid_argument(summarize(violations)), violations_(std::move(violations)) {}

std::vector<Violation> feasibility_check(const Allocation& alloc, double tol) {
  std::vector<Violation> out;
  const auto rows = alloc.x.rows();
  const auto cols = alloc.x.cols();
  if (alloc.y.rows() != rows || alloc.y.cols() != cols || alloc.z.rows() != rows ||
      alloc.z.cols() != cols) {
    out.push_back({"shape", -1, -1, 0.0, false});
    return out;
  }
  auto range_check = [&](const Matrix& m, const char* name) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        const double v = m(i, j);
        if (!std::isfinite(v) || v < -tol || v > 1.0 + tol) {
          const double mag = std::isfinite(v) ? std::max(-v, v - 1.0) : INFINITY;
          out.push_back({name, static_cast<int>(i), static_cast<int>(j), mag, false});
        }
      }
    }
  };
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double v = alloc.x(i, j);
      if (v != 0.0 && v != 1.0) {
        out.push_back({"association_binary", static_cast<int>(i), static_cast<int>(j),
                       std::min(std::abs(v), std::abs(v - 1.0)), false});
      }
    }
  }
  range_check(alloc.y, "bandwidth_range");
  range_check(alloc.z, "compute_range");

  for (Eigen::Index i = 0; i < rows; ++i) {
    const double xs = alloc.x.row(i).sum();
    if (std::abs(xs - 1.0) > tol) {
      out.push_back({"association", static_cast<int>(i), -1, std::abs(xs - 1.0), false});
    }
    const double ys = alloc.y.row(i).sum();
    if (ys > 1.0 + tol) {
      out.push_back({"device_bandwidth", static_cast<int>(i), -1, ys - 1.0, false});
    }
  }
  for (Eigen::Index j = 0; j < cols; ++j) {
    const double band = alloc.x.col(j).cwiseProduct(alloc.y.col(j)).sum();
    if (band > 1.0 + tol) {
      out.push_back({"server_bandwidth", -1, static_cast<int>(j), band - 1.0, true});
    }
    const double zs = alloc.z.col(j).sum();
    if (zs > 1.0 + tol) {
      out.push_back({"server_compute", -1, static_cast<int>(j), zs - 1.0, false});
    }
  }
  return out;
}

EnergyCoefficients energy_coefficients(const ScenarioConfig& cfg) {
  return {cfg.delta_cp, cfg.delta_cm, cfg.flop_unit, cfg.bandwidth_unit_hz};
}

std::vector<double> server_bands(const EnvState& state) {
  std::vector<double> bands;
  bands.reserve(state.servers.size());
  for (const auto& s : state.servers) bands.push_back(s.bandwidth_hz);
  return bands;
}

double ObjectiveReport::mean_end_to_end_s() const {
  double s = 0.0;
  for (const auto& d : devices) s += d.end_to_end_s();
  return devices.empty() ? 0.0 : s / static_cast<double>(devices.size());
}

double ObjectiveReport::mean_raw_latency_s() const {
  double s = 0.0;
  for (const auto& d : devices) s += d.raw_latency_s();
  return devices.empty() ? 0.0 : s / static_cast<double>(devices.size());
}

double ObjectiveReport::total_energy_j() const {
  double s = 0.0;
  for (const auto& d : devices) s += d.energy.total();
  return s;
}

ObjectiveReport evaluate(const EnvState& state, const Allocation& alloc, double lambda,
                         double w) {
  const auto& cfg = *state.config;
  const int m = state.num_devices();
  const int e = state.num_servers();
  if (alloc.x.rows() != m || alloc.x.cols() != e) {
    throw InfeasibleAllocation({{"shape", -1, -1, 0.0, false}});
  }
  auto violations = feasibility_check(alloc);
  if (!violations.empty()) throw InfeasibleAllocation(std::move(violations));

  const Matrix snr = snr_matrix(state);
  const std::vector<double> bands = server_bands(state);
  const EnergyCoefficients coeff = energy_coefficients(cfg);
  const double cap = cfg.sync_cap_s();

  ObjectiveReport report;
  report.devices.resize(m);
  for (int i = 0; i < m; ++i) {
    const Task& task = state.tasks[i];
    const MobileDevice& dev = state.devices[i];
    DeviceTerms& t = report.devices[i];
    Eigen::Index j = 0;
    alloc.x.row(i).maxCoeff(&j);
    t.server = static_cast<int>(j);
    const EdgeServer& srv = state.servers[j];

    t.rate_bps = data_rate(alloc, bands, snr, i, cfg.log_base);
    t.local_s = local_delay(task.f_md, dev.local_flops);
    try {
      t.remote_s = remote_delay(task.f_es, alloc.z(i, j), srv.flops, srv.queue_slots, srv.slot_seconds);
    } catch (const InfeasibleAllocation&) {
      throw InfeasibleAllocation({{"compute_share", i, static_cast<int>(j), 0.0, false}});
    }
    t.upload_s = t.rate_bps > 0.0 ? std::min(task.d_bits / t.rate_bps, cap) : cap;
    const double gap = t.local_s - t.upload_s;
    t.sync_penalty = lambda * gap * gap;
    t.energy = energy(dev, task, alloc, bands, coeff);
    t.weighted_energy = w * t.energy.total() / std::max(dev.battery, cfg.battery_floor);

    report.latency_sum += t.local_s + t.remote_s;
    report.sync_sum += t.sync_penalty;
    report.energy_sum += t.weighted_energy;
  }
  report.value = report.latency_sum + report.sync_sum + report.energy_sum;
  return report;
}

double objective(const EnvState& state, const Allocation& alloc, double lambda, double w) {
  return evaluate(state, alloc, lambda, w).value;
}

Allocation empty_allocation(int devices, int servers) {
  return {Matrix::Zero(devices, servers), Matrix::Zero(devices, servers),
          Matrix::Zero(devices, servers)};
}

std::vector<int> association_of(const Matrix& x) {
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index j = 0;
    x.row(i).maxCoeff(&j);
    out[i] = static_cast<int>(j);
  }
  return out;
}

Matrix association_matrix(const std::vector<int>& server_of, int servers) {
  Matrix x = Matrix::Zero(static_cast<Eigen::Index>(server_of.size()), servers);
  for (std::size_t i = 0; i < server_of.size(); ++i) {
    require(server_of[i] >= 0 && server_of[i] < servers, "association_matrix: server out of range");
    x(static_cast<Eigen::Index>(i), server_of[i]) = 1.0;
  }
  return x;
}

}  // namespace edgespec::mec
