#include <stdexcept>

#include "ho/ppo.hpp"

namespace ho::ppo {

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double bootstrap_value, double gamma, double lambda) {
  if (rewards.size() != values.size() || rewards.size() != dones.size()) {
    throw std::invalid_argument("compute_gae: length mismatch");
  }
  const std::size_t n = rewards.size();
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.targets.assign(n, 0.0);
  double next_adv = 0.0;
  double next_value = bootstrap_value;
  for (std::size_t t = n; t-- > 0;) {
    const double nonterminal = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_value * nonterminal - values[t];
    next_adv = delta + gamma * lambda * nonterminal * next_adv;
    out.advantages[t] = next_adv;
    out.targets[t] = next_adv + values[t];
    next_value = values[t];
  }
  return out;
}

void RolloutBuffer::clear() {
  states.clear();
  actions.clear();
  rewards.clear();
  dones.clear();
  values.clear();
  logprobs.clear();
  advantages.clear();
  returns.clear();
}

}  // namespace ho::ppo
