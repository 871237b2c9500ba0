#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "ho/ppo.hpp"
#include "ho/text.hpp"

namespace ho::ppo {
namespace {

// Episode returns averaged for the training log.
constexpr std::size_t kReturnWindow = 100;

std::string optional_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

void PpoConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("ppo: " + msg); };
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) fail("clip_eps must be in (0, 1)");
  if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma must be in [0, 1)");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) fail("gae_lambda must be in [0, 1]");
  if (!(ent_coef >= 0.0)) fail("ent_coef must be >= 0");
  if (!(vf_coef >= 0.0)) fail("vf_coef must be >= 0");
  if (rollout_len == 0) fail("rollout_len must be positive");
  if (minibatch_size == 0) fail("minibatch_size must be positive");
  if (epochs_per_update == 0) fail("epochs_per_update must be positive");
  if (!std::isfinite(max_grad_norm)) fail("max_grad_norm must be finite");
  if (total_timesteps < 0) fail("total_timesteps must be >= 0");
  if (!(phase1_fraction >= 0.0 && phase1_fraction <= 1.0)) fail("phase1_fraction must be in [0, 1]");
  if (n_envs == 0) fail("n_envs must be positive");
  if (hidden.empty()) fail("hidden must list at least one layer");
  for (auto h : hidden) {
    if (h == 0) fail("hidden layer sizes must be positive");
  }
}

nlohmann::ordered_json to_json(const PpoConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"clip_eps", c.clip_eps},
          {"gamma", c.gamma},
          {"gae_lambda", c.gae_lambda},
          {"ent_coef", c.ent_coef},
          {"vf_coef", c.vf_coef},
          {"rollout_len", c.rollout_len},
          {"minibatch_size", c.minibatch_size},
          {"epochs_per_update", c.epochs_per_update},
          {"max_grad_norm", c.max_grad_norm},
          {"normalize_advantage", c.normalize_advantage},
          {"total_timesteps", c.total_timesteps},
          {"phase1_fraction", c.phase1_fraction},
          {"n_envs", c.n_envs},
          {"hidden", c.hidden},
          {"seed", c.seed}};
}

PpoConfig ppo_config_from_json(const nlohmann::ordered_json& j) {
  PpoConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.clip_eps = j.at("clip_eps").get<double>();
  c.gamma = j.at("gamma").get<double>();
  c.gae_lambda = j.at("gae_lambda").get<double>();
  c.ent_coef = j.at("ent_coef").get<double>();
  c.vf_coef = j.at("vf_coef").get<double>();
  c.rollout_len = j.at("rollout_len").get<std::size_t>();
  c.minibatch_size = j.at("minibatch_size").get<std::size_t>();
  c.epochs_per_update = j.at("epochs_per_update").get<std::size_t>();
  c.max_grad_norm = j.at("max_grad_norm").get<double>();
  c.normalize_advantage = j.at("normalize_advantage").get<bool>();
  c.total_timesteps = j.at("total_timesteps").get<std::int64_t>();
  c.phase1_fraction = j.at("phase1_fraction").get<double>();
  c.n_envs = j.at("n_envs").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

void write_log_header(std::ostream& out) {
  out << "update,timesteps,phase,mean_episode_reward,policy_loss,value_loss,entropy,explained_variance,"
         "approx_kl,clip_fraction\n";
}

void write_log_row(std::ostream& out, const UpdateMetrics& m) {
  out << m.update << ',' << m.timesteps << ',' << m.phase << ',' << optional_field(m.mean_episode_reward) << ','
      << format_double(m.policy_loss) << ',' << format_double(m.value_loss) << ',' << format_double(m.entropy)
      << ',' << format_double(m.explained_variance) << ',' << format_double(m.approx_kl) << ','
      << format_double(m.clip_fraction) << '\n';
}

Trainer::Trainer(PpoConfig cfg, EnvFactory make_env) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
  cfg_.validate();
  for (std::size_t i = 0; i < cfg_.n_envs; ++i) {
    auto env = make_env(i);
    if (!env) throw std::invalid_argument("environment factory returned null");
    if (!envs_.empty() && env->n_bs() != envs_.front()->n_bs()) {
      throw std::invalid_argument("all training environments must have the same number of BSs");
    }
    envs_.push_back(std::move(env));
  }
  const std::size_t n_bs = envs_.front()->n_bs();
  model_ = ActorCritic(2 * n_bs + 1, n_bs, cfg_.hidden);
  model_.init(rng_);
  grads_ = ActorCritic(2 * n_bs + 1, n_bs, cfg_.hidden);
  actor_adam_ = AdamState(model_.actor.parameter_count());
  critic_adam_ = AdamState(model_.critic.parameter_count());
  obs_.resize(envs_.size());
  episode_return_.assign(envs_.size(), 0.0);
  buffers_.resize(envs_.size());
  for (std::size_t i = 0; i < envs_.size(); ++i) begin_episode(i);
}

int Trainer::current_phase() const {
  const double split = cfg_.phase1_fraction * static_cast<double>(cfg_.total_timesteps);
  return static_cast<double>(timesteps_) < split ? 1 : 2;
}

void Trainer::begin_episode(std::size_t i) {
  envs_[i]->set_phase(current_phase());
  obs_[i] = envs_[i]->reset();
  episode_return_[i] = 0.0;
}

void Trainer::restore(const TrainerState& s) {
  if (!s.model.actor.same_shape(model_.actor) || !s.model.critic.same_shape(model_.critic)) {
    throw std::invalid_argument("checkpoint networks do not match the training environment");
  }
  if (s.actor_adam.m.size() != model_.actor.parameter_count() ||
      s.critic_adam.m.size() != model_.critic.parameter_count()) {
    throw std::invalid_argument("checkpoint optimizer state does not match the networks");
  }
  model_ = s.model;
  actor_adam_ = s.actor_adam;
  critic_adam_ = s.critic_adam;
  std::istringstream(s.rng_state) >> rng_;
  timesteps_ = s.timesteps;
  update_ = s.update;
  recent_returns_.clear();
  for (std::size_t i = 0; i < envs_.size(); ++i) {
    if (i < s.env_episodes.size()) envs_[i]->set_episode_index(s.env_episodes[i]);
    begin_episode(i);
  }
}

TrainerState Trainer::snapshot() const {
  TrainerState s;
  s.model = model_;
  s.actor_adam = actor_adam_;
  s.critic_adam = critic_adam_;
  std::ostringstream rng;
  rng << rng_;
  s.rng_state = rng.str();
  s.timesteps = timesteps_;
  s.update = update_;
  // Episodes in flight are restarted on restore, so record their index.
  for (const auto& e : envs_) s.env_episodes.push_back(e->episode_index() == 0 ? 0 : e->episode_index() - 1);
  return s;
}

void Trainer::collect_rollout() {
  finished_this_rollout_.clear();
  for (auto& b : buffers_) {
    b.clear();
    b.state_size = model_.state_size();
  }
  const int phase = current_phase();
  for (auto& e : envs_) e->set_phase(phase);

  for (std::size_t step = 0; step < cfg_.rollout_len; ++step) {
    for (std::size_t i = 0; i < envs_.size(); ++i) {
      auto& buf = buffers_[i];
      const auto state = obs_[i].values();
      const Categorical dist = actor_forward(model_.actor, state);
      const int action = sample_action(dist, rng_);
      const double value = critic_forward(model_.critic, state);

      env::StepResult res = envs_[i]->step(action);
      double reward = res.reward;
      episode_return_[i] += res.reward;
      // A time-limit cut is not a real terminal state: fold the value of the
      // state we would have continued from into the reward.
      if (res.truncated && !res.terminated) {
        reward += cfg_.gamma * critic_forward(model_.critic, res.next_state.values());
      }
      const bool done = res.terminated || res.truncated;

      buf.states.insert(buf.states.end(), state.begin(), state.end());
      buf.actions.push_back(action);
      buf.rewards.push_back(reward);
      buf.dones.push_back(done ? 1 : 0);
      buf.values.push_back(value);
      buf.logprobs.push_back(dist.logprobs[static_cast<std::size_t>(action)]);

      if (done) {
        finished_this_rollout_.push_back(episode_return_[i]);
        recent_returns_.push_back(episode_return_[i]);
        if (recent_returns_.size() > kReturnWindow) recent_returns_.erase(recent_returns_.begin());
        begin_episode(i);
      } else {
        obs_[i] = std::move(res.next_state);
      }
    }
    timesteps_ += static_cast<std::int64_t>(envs_.size());
  }

  for (std::size_t i = 0; i < envs_.size(); ++i) {
    auto& buf = buffers_[i];
    const double bootstrap = critic_forward(model_.critic, obs_[i].values());
    GaeResult gae = compute_gae(buf.rewards, buf.values, buf.dones, bootstrap, cfg_.gamma, cfg_.gae_lambda);
    buf.advantages = std::move(gae.advantages);
    buf.returns = std::move(gae.targets);
  }
}

UpdateMetrics Trainer::update() {
  // The phase the rollout was collected under, before it advances timesteps_.
  const int phase = current_phase();
  collect_rollout();

  // Flatten all environments' buffers into one update batch.
  const std::size_t s = model_.state_size();
  Batch all;
  std::vector<double> values;
  for (const auto& b : buffers_) {
    all.states.insert(all.states.end(), b.states.begin(), b.states.end());
    all.actions.insert(all.actions.end(), b.actions.begin(), b.actions.end());
    all.old_logprobs.insert(all.old_logprobs.end(), b.logprobs.begin(), b.logprobs.end());
    all.advantages.insert(all.advantages.end(), b.advantages.begin(), b.advantages.end());
    all.returns.insert(all.returns.end(), b.returns.begin(), b.returns.end());
    values.insert(values.end(), b.values.begin(), b.values.end());
  }
  if (cfg_.normalize_advantage) normalize(all.advantages);

  UpdateMetrics m;
  m.phase = phase;
  m.explained_variance = explained_variance(values, all.returns);

  const LossWeights w{cfg_.clip_eps, cfg_.ent_coef, cfg_.vf_coef};
  const std::size_t n = all.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Batch mb;
  std::size_t minibatches = 0;
  for (std::size_t epoch = 0; epoch < cfg_.epochs_per_update; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng_);
    for (std::size_t start = 0; start < n; start += cfg_.minibatch_size) {
      const std::size_t end = std::min(n, start + cfg_.minibatch_size);
      mb.states.clear();
      mb.actions.clear();
      mb.old_logprobs.clear();
      mb.advantages.clear();
      mb.returns.clear();
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        mb.states.insert(mb.states.end(), all.states.begin() + static_cast<std::ptrdiff_t>(idx * s),
                         all.states.begin() + static_cast<std::ptrdiff_t>((idx + 1) * s));
        mb.actions.push_back(all.actions[idx]);
        mb.old_logprobs.push_back(all.old_logprobs[idx]);
        mb.advantages.push_back(all.advantages[idx]);
        mb.returns.push_back(all.returns[idx]);
      }
      const LossBreakdown loss = compute_gradients(model_, mb, w, grads_);
      if (!std::isfinite(loss.total)) {
        throw TrainingDiverged("non-finite loss at update " + std::to_string(update_ + 1));
      }
      clip_grad_norm(grads_, cfg_.max_grad_norm);
      try {
        adam_step(model_.actor, grads_.actor, actor_adam_, cfg_.learning_rate, "actor");
        adam_step(model_.critic, grads_.critic, critic_adam_, cfg_.learning_rate, "critic");
      } catch (const NonFiniteGradient& e) {
        throw TrainingDiverged(e.what());
      }
      m.policy_loss += loss.policy_loss;
      m.value_loss += loss.value_loss;
      m.entropy += loss.entropy;
      m.approx_kl += loss.approx_kl;
      m.clip_fraction += loss.clip_fraction;
      ++minibatches;
    }
  }
  if (minibatches > 0) {
    const double inv = 1.0 / static_cast<double>(minibatches);
    m.policy_loss *= inv;
    m.value_loss *= inv;
    m.entropy *= inv;
    m.approx_kl *= inv;
    m.clip_fraction *= inv;
  }
  ++update_;
  m.update = update_;
  m.timesteps = timesteps_;
  if (!recent_returns_.empty()) {
    m.mean_episode_reward = std::accumulate(recent_returns_.begin(), recent_returns_.end(), 0.0) /
                            static_cast<double>(recent_returns_.size());
  }
  return m;
}

void Trainer::train(const std::function<void(const UpdateMetrics&)>& on_update) {
  while (!finished()) {
    const UpdateMetrics m = update();
    if (on_update) on_update(m);
  }
}

}  // namespace ho::ppo
