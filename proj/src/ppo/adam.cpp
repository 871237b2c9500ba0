#include <cmath>
#include <stdexcept>

#include "ho/ppo.hpp"
#include "ho/simd.hpp"

namespace ho::ppo {
namespace {

void apply(std::span<double> params, std::span<const double> grads, AdamState& state, double lr) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: optimizer state shape mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const simd::AdamCoefficients c{lr, state.beta1, state.beta2, state.eps, 1.0 - std::pow(state.beta1, t),
                                 1.0 - std::pow(state.beta2, t)};
  simd::kernels().adam(params.data(), grads.data(), state.m.data(), state.v.data(), params.size(), c);
}

}  // namespace

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: gradient shape mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) throw NonFiniteGradient("param[" + std::to_string(i) + "]", grads[i]);
  }
  apply(params, grads, state, lr);
}

void adam_step(Mlp& params, const Mlp& grads, AdamState& state, double lr, const std::string& prefix) {
  if (!params.same_shape(grads)) throw std::invalid_argument("adam_step: gradient shape mismatch");
  const auto g = grads.parameters();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) throw NonFiniteGradient(prefix + "." + grads.parameter_name(i), g[i]);
  }
  apply(params.parameters(), g, state, lr);
}

}  // namespace ho::ppo
