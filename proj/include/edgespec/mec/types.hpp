#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace edgespec::mec {

using Matrix = Eigen::MatrixXd;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Vec2& a, const Vec2& b);

enum class TaskKind { code, summarize, chat };
inline constexpr int kTaskKinds = 3;
const char* to_string(TaskKind kind);

enum class SnrMode { full_band, psd_literal };
enum class LogBase { two, natural };

struct MobileDevice {
  int id = 0;
  std::string profile;
  Vec2 position;
  Vec2 velocity;  // m/s; zero once the waypoint is reached
  Vec2 waypoint;
  double tx_power_w = 0.1;
  double local_flops = 1e11;  // F^MD
  double battery = 1.0;       // B_i, fraction of capacity
  double battery_capacity_j = 1.0;
};

struct EdgeServer {
  int id = 0;
  std::string profile;
  Vec2 position;
  double flops = 1e12;         // F^ES
  double bandwidth_hz = 1e6;   // W_j = W / E
  int queue_slots = 0;         // k
  double slot_seconds = 0.05;  // kappa
};

struct Task {
  int owner = 0;
  TaskKind kind = TaskKind::chat;
  int tokens = 0;
  double d_bits = 0.0;
  double f_md = 0.0;
  double f_es = 0.0;
};

struct ChannelState {
  Matrix h;  // M x E gains
  double noise_psd_w_hz = 0.0;
};

/// X binary association, Y bandwidth fractions, Z compute fractions; all M x E.
struct Allocation {
  Matrix x;
  Matrix y;
  Matrix z;
};

struct PathLossParams {
  double pl0_db = 21.5;
  double exponent = 1.75;
  double d0_m = 1.0;
  bool fading = true;
};

struct DeviceProfile {
  std::string name;
  double flops = 1e11;
};

struct ServerProfile {
  std::string name;
  double flops = 1e12;
};

struct TaskProfile {
  TaskKind kind = TaskKind::chat;
  double expected_tokens = 48.0;
};

/// Everything needed to build and advance an environment. Loaded from JSON.
struct ScenarioConfig {
  int devices = 12;
  int servers = 3;
  double area_m = 200.0;
  std::vector<Vec2> server_positions;  // empty -> ring around the centre
  double speed_min_mps = 0.5;
  double speed_max_mps = 1.5;

  double bandwidth_hz = 10e6;
  double tx_power_min_dbm = 16.0;
  double tx_power_max_dbm = 24.0;
  double noise_psd_dbm_hz = -174.0;
  PathLossParams path_loss;
  SnrMode snr_mode = SnrMode::full_band;
  LogBase log_base = LogBase::two;

  double delta_cp = 1e9;
  double delta_cm = 2.6;
  /// Energies use f_md / flop_unit and W_j / bandwidth_unit_hz.
  double flop_unit = 1.0;
  double bandwidth_unit_hz = 1.0;
  double lambda = 1e-2;
  double w = 20.0;

  int slots = 50;  // T
  double slot_seconds = 1.0;  // tau
  double kappa_s = -1.0;      // < 0 -> tau
  double queue_mean = 0.5;

  std::vector<DeviceProfile> device_profiles{
      {"galaxy-s23", 1.0e11}, {"iphone-14", 8.0e10}, {"mate-60", 6.0e10}};
  std::vector<ServerProfile> server_profiles{
      {"rtx-2080", 1.2e12}, {"rtx-3090", 2.0e12}, {"rtx-4090", 3.2e12}};

  double battery_capacity_j = 40.0;
  double battery_min = 0.05;
  double battery_max = 1.0;
  /// Objective divides energy by max(B_i, battery_floor).
  double battery_floor = 0.01;

  double bits_per_token = 8192.0;
  double draft_flops_per_token = 2.7e8;
  double verify_flops_per_token = 3.2e9;
  std::vector<TaskProfile> task_profiles{
      {TaskKind::code, 192.0}, {TaskKind::summarize, 96.0}, {TaskKind::chat, 48.0}};
  /// Gamma shape of the per-task token count around the kind's expectation;
  /// <= 0 uses the expectation exactly.
  double length_shape = 2.0;

  double kappa() const { return kappa_s < 0.0 ? slot_seconds : kappa_s; }
  double sync_cap_s() const { return slot_seconds * slots; }
  void validate() const;
};

struct EnvState {
  std::shared_ptr<const ScenarioConfig> config;
  std::uint64_t seed = 0;
  int slot = 0;
  std::vector<MobileDevice> devices;
  std::vector<EdgeServer> servers;
  ChannelState channel;
  std::vector<Task> tasks;
  /// Energy (J) each device spent in the previous slot; drained on step.
  std::vector<double> last_energy_j;

  int num_devices() const { return static_cast<int>(devices.size()); }
  int num_servers() const { return static_cast<int>(servers.size()); }
};

}  // namespace edgespec::mec
