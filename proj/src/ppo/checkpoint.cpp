#include <fstream>
#include <sstream>

#include "ho/ppo.hpp"

namespace ho::ppo {
namespace {

using json = nlohmann::ordered_json;

json mlp_to_json(const Mlp& m) {
  const auto p = m.parameters();
  return {{"sizes", m.sizes()}, {"params", std::vector<double>(p.begin(), p.end())}};
}

Mlp mlp_from_json(const json& j) {
  Mlp m(j.at("sizes").get<std::vector<std::size_t>>());
  const auto params = j.at("params").get<std::vector<double>>();
  if (params.size() != m.parameter_count()) throw CheckpointError("parameter count does not match layer sizes");
  std::copy(params.begin(), params.end(), m.parameters().begin());
  return m;
}

json adam_to_json(const AdamState& a) {
  return {{"step", a.step}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}, {"m", a.m}, {"v", a.v}};
}

AdamState adam_from_json(const json& j, std::size_t n) {
  AdamState a;
  a.step = j.at("step").get<std::int64_t>();
  a.beta1 = j.at("beta1").get<double>();
  a.beta2 = j.at("beta2").get<double>();
  a.eps = j.at("eps").get<double>();
  a.m = j.at("m").get<std::vector<double>>();
  a.v = j.at("v").get<std::vector<double>>();
  if (a.m.size() != n || a.v.size() != n) throw CheckpointError("optimizer moments do not match the network");
  return a;
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  const json j = {{"format", "ho-ppo-checkpoint"},
                  {"version", kCheckpointVersion},
                  {"config", to_json(c.config)},
                  {"run", c.run_snapshot},
                  {"timesteps", c.state.timesteps},
                  {"update", c.state.update},
                  {"env_episodes", c.state.env_episodes},
                  {"rng_state", c.state.rng_state},
                  {"actor", mlp_to_json(c.state.model.actor)},
                  {"critic", mlp_to_json(c.state.model.critic)},
                  {"actor_adam", adam_to_json(c.state.actor_adam)},
                  {"critic_adam", adam_to_json(c.state.critic_adam)}};
  // Write to a sibling file first so a crash never leaves a torn checkpoint.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open " + tmp.string() + " for writing");
    out << j.dump(1) << '\n';
    if (!out) throw CheckpointError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CheckpointError("cannot move checkpoint into place: " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw CheckpointError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "ho-ppo-checkpoint") throw CheckpointError("not a checkpoint file");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint c;
    c.config = ppo_config_from_json(j.at("config"));
    c.run_snapshot = j.at("run");
    c.state.timesteps = j.at("timesteps").get<std::int64_t>();
    c.state.update = j.at("update").get<std::int64_t>();
    c.state.env_episodes = j.at("env_episodes").get<std::vector<std::uint64_t>>();
    c.state.rng_state = j.at("rng_state").get<std::string>();
    c.state.model.actor = mlp_from_json(j.at("actor"));
    c.state.model.critic = mlp_from_json(j.at("critic"));
    if (c.state.model.actor.input_size() != c.state.model.critic.input_size() ||
        c.state.model.critic.output_size() != 1) {
      throw CheckpointError("actor and critic shapes are inconsistent");
    }
    c.state.actor_adam = adam_from_json(j.at("actor_adam"), c.state.model.actor.parameter_count());
    c.state.critic_adam = adam_from_json(j.at("critic_adam"), c.state.model.critic.parameter_count());
    return c;
  } catch (const json::exception& e) {
    throw CheckpointError("malformed checkpoint " + path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError("malformed checkpoint " + path.string() + ": " + e.what());
  }
}

void ensure_compatible(const Checkpoint& c, std::size_t state_size, std::size_t n_actions) {
  const auto& a = c.state.model.actor;
  if (a.input_size() != state_size || a.output_size() != n_actions) {
    throw IncompatibleCheckpoint("checkpoint expects state size " + std::to_string(a.input_size()) + " and " +
                                 std::to_string(a.output_size()) + " actions, traces give state size " +
                                 std::to_string(state_size) + " and " + std::to_string(n_actions) + " actions");
  }
}

}  // namespace ho::ppo
