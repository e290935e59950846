#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgespec/common/rng.hpp"
#include "edgespec/mec/types.hpp"

namespace edgespec::mec {

double dbm_to_watts(double dbm);

/// Log-distance path loss with an optional unit-mean Rayleigh power fade.
/// Distances below one metre are clamped to one metre.
double path_gain(double distance_m, const PathLossParams& pl, double fade);
double path_gain(const MobileDevice& device, const EdgeServer& server, const PathLossParams& pl,
                 Rng& rng);
double rayleigh_power_fade(Rng& rng);

/// Gains for every device/server pair at the state's slot. The fade of each
/// pair comes from its own stream keyed on (seed, slot, i, j).
Matrix channel_gains(const EnvState& state);

double snr(double h, double power_w, double noise_psd, double band_hz, SnrMode mode);
Matrix snr_matrix(const EnvState& state);

double spectral_efficiency(double snr_value, LogBase base);

/// R_i = sum_j x_ij y_ij W_j log(1 + SNR_ij).
double data_rate(const Allocation& alloc, const std::vector<double>& band_hz, const Matrix& snr,
                 int device, LogBase base = LogBase::two);

double local_delay(double f_md, double device_flops);
double remote_delay(double f_es, double z, double server_flops, int queue_slots, double kappa_s);

struct EnergyTerms {
  double compute = 0.0;        // E^CP
  double communication = 0.0;  // E^CM
  double total() const { return compute + communication; }
};

struct EnergyCoefficients {
  double delta_cp = 1e9;
  double delta_cm = 2.6;
  double flop_unit = 1.0;
  double bandwidth_unit_hz = 1.0;
};

EnergyTerms energy(const MobileDevice& device, const Task& task, const Allocation& alloc,
                   const std::vector<double>& band_hz, const EnergyCoefficients& coeff);

struct Violation {
  std::string constraint;  // "association", "device_bandwidth", ...
  int device = -1;
  int server = -1;
  double magnitude = 0.0;
  bool extension = false;  // constraint added on top of the printed model
  std::string describe() const;
};

/// Empty iff X rows are one-hot, every device's bandwidth shares sum to at
/// most 1, and every server's associated bandwidth and compute shares sum to
/// at most 1. Entries outside [0, 1] are reported too.
std::vector<Violation> feasibility_check(const Allocation& alloc, double tol = 1e-9);

class InfeasibleAllocation : public std::invalid_argument {
 public:
  explicit InfeasibleAllocation(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

struct DeviceTerms {
  int server = -1;
  double rate_bps = 0.0;
  double local_s = 0.0;     // D^MD
  double remote_s = 0.0;    // D^ES
  double upload_s = 0.0;    // d / R, capped at tau * T
  double sync_penalty = 0.0;  // lambda (D^MD - upload)^2
  EnergyTerms energy;
  double weighted_energy = 0.0;  // w (E^CP + E^CM) / B
  /// D^MD + D^ES.
  double raw_latency_s() const { return local_s + remote_s; }
  /// Drafting and upload overlap, so the slower of the two gates the server.
  double end_to_end_s() const { return remote_s + std::max(local_s, upload_s); }
};

struct ObjectiveReport {
  double value = 0.0;
  double latency_sum = 0.0;  // sum of D^MD + D^ES
  double sync_sum = 0.0;
  double energy_sum = 0.0;   // weighted energy term
  std::vector<DeviceTerms> devices;

  double mean_end_to_end_s() const;
  double mean_raw_latency_s() const;
  double total_energy_j() const;
};

EnergyCoefficients energy_coefficients(const ScenarioConfig& cfg);
std::vector<double> server_bands(const EnvState& state);

/// Evaluates the objective. Throws InfeasibleAllocation when the allocation
/// violates a constraint or gives an offloading device zero compute share.
ObjectiveReport evaluate(const EnvState& state, const Allocation& alloc, double lambda, double w);
double objective(const EnvState& state, const Allocation& alloc, double lambda, double w);

/// Allocation matrices of the right shape, all zero.
Allocation empty_allocation(int devices, int servers);

/// Server each device is associated with (row argmax of X).
std::vector<int> association_of(const Matrix& x);
Matrix association_matrix(const std::vector<int>& server_of, int servers);

}  // namespace edgespec::mec
