#pragma once

// Proximal policy optimization with separate actor and critic networks.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ho/env.hpp"
#include "ho/mlp.hpp"
#include "json.hpp"

namespace ho::ppo {

struct PpoConfig {
  double learning_rate = 5e-5;
  double clip_eps = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double ent_coef = 0.1;
  double vf_coef = 0.5;
  std::size_t rollout_len = 2048;  // steps per environment per update
  std::size_t minibatch_size = 64;
  std::size_t epochs_per_update = 10;
  double max_grad_norm = 0.5;  // <= 0 disables clipping
  bool normalize_advantage = true;
  std::int64_t total_timesteps = 2'000'000;
  double phase1_fraction = 0.5;
  std::size_t n_envs = 1;
  std::vector<std::size_t> hidden = {64, 128, 64};
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::ordered_json to_json(const PpoConfig& cfg);
PpoConfig ppo_config_from_json(const nlohmann::ordered_json& j);

struct Categorical {
  std::vector<double> logits;
  std::vector<double> probs;
  std::vector<double> logprobs;
};

class ActorCritic {
 public:
  ActorCritic() = default;
  ActorCritic(std::size_t state_size, std::size_t n_actions, const std::vector<std::size_t>& hidden);

  // Orthogonal init: hidden gain sqrt(2), policy head 0.01, value head 1.
  void init(std::mt19937_64& rng);

  Mlp actor;
  Mlp critic;

  std::size_t state_size() const { return actor.input_size(); }
  std::size_t n_actions() const { return actor.output_size(); }

  bool operator==(const ActorCritic&) const = default;
};

Categorical actor_forward(const Mlp& actor, std::span<const double> state);
double critic_forward(const Mlp& critic, std::span<const double> state);
// Row-major batch of states; returns one value per row.
std::vector<double> critic_forward_batch(const Mlp& critic, std::span<const double> states);

int sample_action(const Categorical& dist, std::mt19937_64& rng);
// Lowest index among the most probable actions.
int greedy_action(const Categorical& dist);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> targets;
};

// delta_t = r_t + gamma V_{t+1} (1 - done_t) - V_t, V_T = bootstrap_value
// A_t = delta_t + gamma lambda (1 - done_t) A_{t+1}; targets = A + V
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double bootstrap_value, double gamma,
                      double lambda);

// -mean(min(psi A, clip(psi, 1-eps, 1+eps) A)), psi = exp(new - old)
double clipped_policy_loss(std::span<const double> logprobs_new, std::span<const double> logprobs_old,
                           std::span<const double> advantages, double clip_eps);

double value_loss(std::span<const double> values_pred, std::span<const double> targets);

// Mean entropy (nats) of a set of categorical distributions.
double entropy_bonus(std::span<const std::vector<double>> distributions);

void normalize(std::span<double> values);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
  bool operator==(const AdamState&) const = default;
};

class NonFiniteGradient : public std::runtime_error {
 public:
  NonFiniteGradient(const std::string& path, double value)
      : std::runtime_error("non-finite gradient at " + path + " (" + std::to_string(value) + ")"), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Bias-corrected Adam. Throws NonFiniteGradient naming `prefix.<param>`
// before touching any state when a gradient is NaN/inf.
void adam_step(Mlp& params, const Mlp& grads, AdamState& state, double lr, const std::string& prefix);
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr);

// A minibatch in row-major layout.
struct Batch {
  std::vector<double> states;  // [n x state_size]
  std::vector<int> actions;
  std::vector<double> old_logprobs;
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return actions.size(); }
};

struct LossWeights {
  double clip_eps = 0.2;
  double ent_coef = 0.1;
  double vf_coef = 0.5;
};

struct LossBreakdown {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double total = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

// Forward-only evaluation of total = policy - ent_coef * entropy + vf_coef * value.
LossBreakdown evaluate_loss(const ActorCritic& model, const Batch& batch, const LossWeights& w);

// Exact gradients of the same total loss, accumulated into `grads` (which is
// zeroed first).
LossBreakdown compute_gradients(const ActorCritic& model, const Batch& batch, const LossWeights& w,
                                ActorCritic& grads);

// Scales all gradients so their joint L2 norm is at most max_norm; returns
// the norm before clipping.
double clip_grad_norm(ActorCritic& grads, double max_norm);

struct RolloutBuffer {
  std::size_t state_size = 0;
  std::vector<double> states;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;
  std::vector<double> values;
  std::vector<double> logprobs;
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return actions.size(); }
  void clear();
};

struct UpdateMetrics {
  std::int64_t update = 0;
  std::int64_t timesteps = 0;
  int phase = 1;
  std::optional<double> mean_episode_reward;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double explained_variance = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

void write_log_header(std::ostream& out);
void write_log_row(std::ostream& out, const UpdateMetrics& m);

double explained_variance(std::span<const double> predicted, std::span<const double> targets);

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using EnvFactory = std::function<std::unique_ptr<env::HandoverEnv>(std::size_t env_index)>;

// Serializable trainer state.
struct TrainerState {
  ActorCritic model;
  AdamState actor_adam;
  AdamState critic_adam;
  std::string rng_state;
  std::int64_t timesteps = 0;
  std::int64_t update = 0;
  std::vector<std::uint64_t> env_episodes;
};

class Trainer {
 public:
  Trainer(PpoConfig cfg, EnvFactory make_env);

  // Continue from a checkpointed state (shapes must match).
  void restore(const TrainerState& state);
  TrainerState snapshot() const;

  // Collect one rollout and run the optimization epochs.
  UpdateMetrics update();

  // Updates until total_timesteps is reached; the callback sees every
  // update's metrics.
  void train(const std::function<void(const UpdateMetrics&)>& on_update = {});

  bool finished() const { return timesteps_ >= cfg_.total_timesteps; }
  int current_phase() const;
  const ActorCritic& model() const { return model_; }
  const PpoConfig& config() const { return cfg_; }
  std::int64_t timesteps() const { return timesteps_; }

 private:
  void collect_rollout();
  void begin_episode(std::size_t env_index);

  PpoConfig cfg_;
  std::vector<std::unique_ptr<env::HandoverEnv>> envs_;
  std::vector<env::StateVector> obs_;
  std::vector<double> episode_return_;
  std::vector<double> recent_returns_;
  std::vector<double> finished_this_rollout_;
  ActorCritic model_;
  ActorCritic grads_;
  AdamState actor_adam_;
  AdamState critic_adam_;
  std::mt19937_64 rng_;
  std::vector<RolloutBuffer> buffers_;
  std::int64_t timesteps_ = 0;
  std::int64_t update_ = 0;
};

// --- checkpoints ------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  TrainerState state;
  PpoConfig config;
  nlohmann::ordered_json run_snapshot = nlohmann::ordered_json::object();
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IncompatibleCheckpoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Throws IncompatibleCheckpoint unless the networks match the given sizes.
void ensure_compatible(const Checkpoint& ckpt, std::size_t state_size, std::size_t n_actions);

}  // namespace ho::ppo
