#include "edgespec/masac/train.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "edgespec/common/error.hpp"

namespace edgespec::masac {

namespace {

constexpr const char* kFormat = "edgespec-masac";
constexpr int kVersion = 1;

Vector flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

nlohmann::json dims_to_json(const AgentDims& d) {
  return {{"agents", d.agents}, {"obs", d.obs}, {"state", d.state}, {"action", d.action}};
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_std(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), Eigen::Index(v.size())); }

std::vector<Vector> read_vectors(const nlohmann::json& j) {
  std::vector<Vector> out;
  for (const auto& v : j) out.push_back(from_std(v.get<std::vector<double>>()));
  return out;
}

}  // namespace

std::uint64_t episode_seed(std::uint64_t master, int episode) {
  return hash_combine(stream_seed(master, "episode"), std::uint64_t(episode));
}

TrainResult train(Environment& env, const SacConfig& cfg, int episodes, std::uint64_t seed,
                  const std::function<void(const CurveRow&)>& on_episode) {
  require(episodes >= 0, "train: episodes must be >= 0");
  const AgentDims dims{env.num_agents(), env.obs_size(), env.state_size(), env.action_size()};
  Rng init_rng = make_stream(seed, "init");
  TrainResult result{Masac(dims, cfg, init_rng), {}};
  Masac& model = result.model;
  ReplayBuffer replay(cfg.replay_capacity, dims.agents * dims.obs, dims.state, dims.agents * dims.action);
  Rng policy_rng = make_stream(seed, "policy");
  Rng replay_rng = make_stream(seed, "replay");
  Rng update_rng = make_stream(seed, "update");
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  long steps = 0;

  for (int ep = 0; ep < episodes; ++ep) {
    env.reset(episode_seed(seed, ep));
    Observation obs = env.observe();
    double reward_sum = 0.0;
    int slots = 0;
    CurveRow row;
    row.episode = ep;
    int updates = 0;
    for (int t = 0; t < env.episode_length(); ++t) {
      Matrix action(dims.action, dims.agents);
      if (steps < cfg.warmup_steps) {
        for (Eigen::Index k = 0; k < action.size(); ++k) action.data()[k] = uniform(policy_rng);
      } else {
        action = model.act(obs.agents, policy_rng, false);
      }
      const StepOutcome out = env.step(action);
      const Observation next = env.observe();
      replay.add({flatten(obs.agents), obs.state, flatten(action), out.reward, flatten(next.agents), next.state,
                  out.done});
      ++steps;
      reward_sum += out.reward;
      ++slots;
      if (steps >= cfg.warmup_steps && replay.size() >= cfg.batch_size) {
        for (int u = 0; u < cfg.updates_per_step; ++u) {
          const UpdateStats s = model.update(replay.sample(cfg.batch_size, replay_rng), update_rng);
          if (!(std::abs(s.critic_loss) <= cfg.divergence_limit) ||
              !(std::abs(s.policy_loss) <= cfg.divergence_limit)) {
            std::ostringstream msg;
            msg << "training diverged at episode " << ep << ", step " << steps << ": critic loss "
                << s.critic_loss << ", policy loss " << s.policy_loss << ", entropy " << s.entropy
                << " (limit " << cfg.divergence_limit << ")";
            throw TrainingError(msg.str());
          }
          row.critic_loss += s.critic_loss;
          row.policy_loss += s.policy_loss;
          row.entropy += s.entropy;
          ++updates;
        }
      }
      obs = next;
      if (out.done) break;
    }
    row.mean_reward = slots > 0 ? reward_sum / slots : 0.0;
    if (updates > 0) {
      row.critic_loss /= updates;
      row.policy_loss /= updates;
      row.entropy /= updates;
    }
    result.curve.push_back(row);
    if (on_episode) on_episode(row);
  }
  return result;
}

void write_curve_csv(std::ostream& out, const std::vector<CurveRow>& curve) {
  out << "episode,mean_reward,critic_loss,policy_loss,entropy\n";
  const auto flags = out.flags();
  const auto precision = out.precision(10);
  for (const auto& r : curve)
    out << r.episode << ',' << r.mean_reward << ',' << r.critic_loss << ',' << r.policy_loss << ',' << r.entropy
        << '\n';
  out.flags(flags);
  out.precision(precision);
}

std::uint64_t config_hash(const AgentDims& dims, const SacConfig& cfg, const nlohmann::json& metadata) {
  const nlohmann::json j{{"dims", dims_to_json(dims)}, {"sac", sac_to_json(cfg)}, {"metadata", metadata}};
  return fnv1a(j.dump());
}

void save_checkpoint(const std::filesystem::path& path, const Masac& model, const nlohmann::json& metadata) {
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["config_hash"] = config_hash(model.dims(), model.config(), metadata);
  j["dims"] = dims_to_json(model.dims());
  j["sac"] = sac_to_json(model.config());
  j["metadata"] = metadata;
  j["policies"] = nlohmann::json::array();
  for (const auto& p : model.policies()) j["policies"].push_back(to_std(p.net.params()));
  j["critics"] = nlohmann::json::array();
  for (const auto& c : model.critics()) j["critics"].push_back(to_std(c.params()));
  j["targets"] = nlohmann::json::array();
  for (const auto& c : model.target_critics()) j["targets"].push_back(to_std(c.params()));
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << j.dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    if (j.value("format", "") != kFormat) throw ConfigError("not a checkpoint: " + path.string());
    if (j.at("version").get<int>() != kVersion)
      throw ConfigError("unsupported checkpoint version in " + path.string());
    const auto& d = j.at("dims");
    const AgentDims dims{d.at("agents").get<int>(), d.at("obs").get<int>(), d.at("state").get<int>(),
                         d.at("action").get<int>()};
    const SacConfig cfg = sac_from_json(j.at("sac"));
    const std::uint64_t hash = j.at("config_hash").get<std::uint64_t>();
    if (hash != config_hash(dims, cfg, j.at("metadata")))
      throw ConfigError("checkpoint config hash mismatch in " + path.string());
    return {Masac(dims, cfg, read_vectors(j.at("policies")), read_vectors(j.at("critics")),
                  read_vectors(j.at("targets"))),
            j.at("metadata"), hash};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed checkpoint " + path.string() + ": " + e.what());
  } catch (const ContractViolation& e) {
    throw ConfigError("inconsistent checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace edgespec::masac
