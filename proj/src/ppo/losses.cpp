#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ho/ppo.hpp"
#include "ho/simd.hpp"

namespace ho::ppo {
namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
}

std::vector<std::size_t> layer_sizes(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace

ActorCritic::ActorCritic(std::size_t state_size, std::size_t n_actions, const std::vector<std::size_t>& hidden)
    : actor(layer_sizes(state_size, hidden, n_actions)), critic(layer_sizes(state_size, hidden, 1)) {}

void ActorCritic::init(std::mt19937_64& rng) {
  actor.init_orthogonal(rng, std::sqrt(2.0), 0.01);
  critic.init_orthogonal(rng, std::sqrt(2.0), 1.0);
}

Categorical actor_forward(const Mlp& actor, std::span<const double> state) {
  if (state.size() != actor.input_size()) {
    throw std::invalid_argument("actor_forward: state has " + std::to_string(state.size()) +
                                " entries, network expects " + std::to_string(actor.input_size()));
  }
  Categorical d;
  d.logits.resize(actor.output_size());
  d.probs.resize(actor.output_size());
  d.logprobs.resize(actor.output_size());
  actor.forward(state, d.logits);
  softmax(d.logits, d.probs);
  log_softmax(d.logits, d.logprobs);
  return d;
}

double critic_forward(const Mlp& critic, std::span<const double> state) {
  if (state.size() != critic.input_size()) {
    throw std::invalid_argument("critic_forward: state has " + std::to_string(state.size()) +
                                " entries, network expects " + std::to_string(critic.input_size()));
  }
  double v = 0.0;
  critic.forward(state, std::span<double>(&v, 1));
  return v;
}

std::vector<double> critic_forward_batch(const Mlp& critic, std::span<const double> states) {
  const std::size_t s = critic.input_size();
  if (states.size() % s != 0) throw std::invalid_argument("critic_forward_batch: ragged batch");
  std::vector<double> out(states.size() / s);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = critic_forward(critic, states.subspan(i * s, s));
  return out;
}

int sample_action(const Categorical& dist, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(rng);
  double cum = 0.0;
  for (std::size_t i = 0; i < dist.probs.size(); ++i) {
    cum += dist.probs[i];
    if (x < cum) return static_cast<int>(i);
  }
  // Rounding left cum slightly below 1; fall back to the last positive entry.
  for (std::size_t i = dist.probs.size(); i-- > 0;) {
    if (dist.probs[i] > 0.0) return static_cast<int>(i);
  }
  return 0;
}

int greedy_action(const Categorical& dist) {
  return static_cast<int>(std::max_element(dist.probs.begin(), dist.probs.end()) - dist.probs.begin());
}

double clipped_policy_loss(std::span<const double> logprobs_new, std::span<const double> logprobs_old,
                           std::span<const double> advantages, double clip_eps) {
  require_same_length(logprobs_new.size(), logprobs_old.size(), "clipped_policy_loss");
  require_same_length(logprobs_new.size(), advantages.size(), "clipped_policy_loss");
  if (logprobs_new.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < logprobs_new.size(); ++i) {
    const double ratio = std::exp(logprobs_new[i] - logprobs_old[i]);
    const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    sum += std::min(ratio * advantages[i], clipped * advantages[i]);
  }
  return -sum / static_cast<double>(logprobs_new.size());
}

double value_loss(std::span<const double> values_pred, std::span<const double> targets) {
  require_same_length(values_pred.size(), targets.size(), "value_loss");
  if (values_pred.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < values_pred.size(); ++i) {
    const double r = values_pred[i] - targets[i];
    sum += r * r;
  }
  return sum / static_cast<double>(values_pred.size());
}

double entropy_bonus(std::span<const std::vector<double>> distributions) {
  if (distributions.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : distributions) sum += entropy(p);
  return sum / static_cast<double>(distributions.size());
}

void normalize(std::span<double> values) {
  if (values.size() < 2) return;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  // Sample std (n - 1), matching torch.std.
  const double sd = std::sqrt(var / (n - 1.0));
  for (double& v : values) v = (v - mean) / (sd + 1e-8);
}

double explained_variance(std::span<const double> predicted, std::span<const double> targets) {
  require_same_length(predicted.size(), targets.size(), "explained_variance");
  const double n = static_cast<double>(targets.size());
  if (targets.empty()) return 0.0;
  const double mean_t = std::accumulate(targets.begin(), targets.end(), 0.0) / n;
  double var_t = 0.0;
  double mean_r = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) mean_r += targets[i] - predicted[i];
  mean_r /= n;
  double var_r = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    var_t += (targets[i] - mean_t) * (targets[i] - mean_t);
    const double r = targets[i] - predicted[i] - mean_r;
    var_r += r * r;
  }
  if (var_t == 0.0) return std::nan("");
  return 1.0 - var_r / var_t;
}

namespace {

// Shared per-sample loss evaluation; when `grads` is non-null, accumulates
// the exact gradient of the batch-mean loss.
LossBreakdown run_batch(const ActorCritic& model, const Batch& batch, const LossWeights& w, ActorCritic* grads) {
  const std::size_t n = batch.size();
  const std::size_t s = model.state_size();
  const std::size_t a = model.n_actions();
  if (batch.states.size() != n * s || batch.old_logprobs.size() != n || batch.advantages.size() != n ||
      batch.returns.size() != n) {
    throw std::invalid_argument("batch arrays have inconsistent sizes");
  }
  LossBreakdown out;
  if (n == 0) return out;

  const double inv_n = 1.0 / static_cast<double>(n);
  Mlp::Tape actor_tape;
  Mlp::Tape critic_tape;
  std::vector<double> probs(a);
  std::vector<double> logp(a);
  std::vector<double> grad_logits(a);

  for (std::size_t i = 0; i < n; ++i) {
    const auto state = std::span<const double>(batch.states).subspan(i * s, s);
    const auto action = static_cast<std::size_t>(batch.actions[i]);
    if (action >= a) throw std::invalid_argument("batch action out of range");

    model.actor.forward(state, actor_tape);
    const auto& logits = actor_tape.activations.back();
    softmax(logits, probs);
    log_softmax(logits, logp);

    const double log_ratio = logp[action] - batch.old_logprobs[i];
    const double ratio = std::exp(log_ratio);
    const double adv = batch.advantages[i];
    const double surr_unclipped = ratio * adv;
    const double surr_clipped = std::clamp(ratio, 1.0 - w.clip_eps, 1.0 + w.clip_eps) * adv;
    out.policy_loss -= std::min(surr_unclipped, surr_clipped) * inv_n;
    out.approx_kl += ((ratio - 1.0) - log_ratio) * inv_n;
    if (std::abs(ratio - 1.0) > w.clip_eps) out.clip_fraction += inv_n;

    double h = 0.0;
    for (std::size_t k = 0; k < a; ++k) h -= probs[k] * logp[k];
    out.entropy += h * inv_n;

    model.critic.forward(state, critic_tape);
    const double value = critic_tape.activations.back()[0];
    const double resid = value - batch.returns[i];
    out.value_loss += resid * resid * inv_n;

    if (grads) {
      // d(-min(...))/d logp_a: the unclipped branch carries ratio * A.
      const double g_logp = surr_unclipped <= surr_clipped ? -surr_unclipped * inv_n : 0.0;
      for (std::size_t k = 0; k < a; ++k) {
        const double onehot = k == action ? 1.0 : 0.0;
        grad_logits[k] = g_logp * (onehot - probs[k]) + w.ent_coef * inv_n * probs[k] * (logp[k] + h);
      }
      model.actor.backward(actor_tape, grad_logits, grads->actor);
      const double g_value = w.vf_coef * 2.0 * resid * inv_n;
      model.critic.backward(critic_tape, std::span<const double>(&g_value, 1), grads->critic);
    }
  }
  out.total = out.policy_loss - w.ent_coef * out.entropy + w.vf_coef * out.value_loss;
  return out;
}

}  // namespace

LossBreakdown evaluate_loss(const ActorCritic& model, const Batch& batch, const LossWeights& w) {
  return run_batch(model, batch, w, nullptr);
}

LossBreakdown compute_gradients(const ActorCritic& model, const Batch& batch, const LossWeights& w,
                                ActorCritic& grads) {
  if (!grads.actor.same_shape(model.actor) || !grads.critic.same_shape(model.critic)) {
    throw std::invalid_argument("gradient buffers do not match the model");
  }
  grads.actor.set_zero();
  grads.critic.set_zero();
  return run_batch(model, batch, w, &grads);
}

double clip_grad_norm(ActorCritic& grads, double max_norm) {
  const auto ga = grads.actor.parameters();
  const auto gc = grads.critic.parameters();
  const double norm = std::sqrt(simd::dot(ga, ga) + simd::dot(gc, gc));
  if (max_norm > 0.0 && norm > max_norm) {
    const double coef = max_norm / (norm + 1e-6);
    simd::scale(coef, ga);
    simd::scale(coef, gc);
  }
  return norm;
}

}  // namespace ho::ppo
