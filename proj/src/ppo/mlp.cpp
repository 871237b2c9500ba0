#include "ho/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ho/simd.hpp"

namespace ho::ppo {

Mlp::Mlp(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp needs at least input and output sizes");
  std::size_t offset = 0;
  std::size_t widest = 0;
  for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
    Layer l;
    l.in = sizes_[i];
    l.out = sizes_[i + 1];
    if (l.in == 0 || l.out == 0) throw std::invalid_argument("Mlp layer sizes must be positive");
    l.weight_offset = offset;
    offset += l.in * l.out;
    l.bias_offset = offset;
    offset += l.out;
    layers_.push_back(l);
    widest = std::max({widest, l.in, l.out});
  }
  params_.assign(offset, 0.0);
  widest_ = widest;
}

std::span<double> Mlp::weights(std::size_t layer) {
  const Layer& l = layers_.at(layer);
  return {params_.data() + l.weight_offset, l.in * l.out};
}
std::span<double> Mlp::bias(std::size_t layer) {
  const Layer& l = layers_.at(layer);
  return {params_.data() + l.bias_offset, l.out};
}
std::span<const double> Mlp::weights(std::size_t layer) const {
  const Layer& l = layers_.at(layer);
  return {params_.data() + l.weight_offset, l.in * l.out};
}
std::span<const double> Mlp::bias(std::size_t layer) const {
  const Layer& l = layers_.at(layer);
  return {params_.data() + l.bias_offset, l.out};
}

std::string Mlp::parameter_name(std::size_t flat_index) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (flat_index >= l.weight_offset && flat_index < l.bias_offset) {
      const std::size_t k = flat_index - l.weight_offset;
      return "layer" + std::to_string(i) + ".weight[" + std::to_string(k / l.in) + "," +
             std::to_string(k % l.in) + "]";
    }
    if (flat_index >= l.bias_offset && flat_index < l.bias_offset + l.out) {
      return "layer" + std::to_string(i) + ".bias[" + std::to_string(flat_index - l.bias_offset) + "]";
    }
  }
  return "param[" + std::to_string(flat_index) + "]";
}

void Mlp::set_zero() { std::fill(params_.begin(), params_.end(), 0.0); }

void Mlp::init_orthogonal(std::mt19937_64& rng, double hidden_gain, double output_gain) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    const double gain = i + 1 == layers_.size() ? output_gain : hidden_gain;
    const auto w = orthogonal_matrix(l.out, l.in, gain, rng);
    std::copy(w.begin(), w.end(), params_.begin() + static_cast<std::ptrdiff_t>(l.weight_offset));
    std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(l.bias_offset), l.out, 0.0);
  }
}

void Mlp::forward(std::span<const double> x, std::span<double> y) const {
  if (x.size() != input_size() || y.size() != output_size()) {
    throw std::invalid_argument("Mlp::forward shape mismatch");
  }
  const auto& k = simd::kernels();
  thread_local std::vector<double> scratch_a;
  thread_local std::vector<double> scratch_b;
  scratch_a.resize(widest_);
  scratch_b.resize(widest_);
  const double* in = x.data();
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    const bool last = i + 1 == layers_.size();
    double* out = last ? y.data() : (i % 2 == 0 ? scratch_a.data() : scratch_b.data());
    const double* w = params_.data() + l.weight_offset;
    const double* b = params_.data() + l.bias_offset;
    for (std::size_t o = 0; o < l.out; ++o) {
      const double z = b[o] + k.dot(w + o * l.in, in, l.in);
      out[o] = last ? z : std::tanh(z);
    }
    in = out;
  }
}

void Mlp::forward(std::span<const double> x, Tape& tape) const {
  if (x.size() != input_size()) throw std::invalid_argument("Mlp::forward shape mismatch");
  const auto& k = simd::kernels();
  tape.activations.resize(sizes_.size());
  tape.activations[0].assign(x.begin(), x.end());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    const bool last = i + 1 == layers_.size();
    const auto& in = tape.activations[i];
    auto& out = tape.activations[i + 1];
    out.resize(l.out);
    const double* w = params_.data() + l.weight_offset;
    const double* b = params_.data() + l.bias_offset;
    for (std::size_t o = 0; o < l.out; ++o) {
      const double z = b[o] + k.dot(w + o * l.in, in.data(), l.in);
      out[o] = last ? z : std::tanh(z);
    }
  }
}

void Mlp::backward(const Tape& tape, std::span<const double> grad_output, Mlp& grads) const {
  if (!same_shape(grads)) throw std::invalid_argument("Mlp::backward gradient shape mismatch");
  if (grad_output.size() != output_size() || tape.activations.size() != sizes_.size()) {
    throw std::invalid_argument("Mlp::backward shape mismatch");
  }
  const auto& k = simd::kernels();
  // Gradient w.r.t. the current layer's pre-activation.
  thread_local std::vector<double> delta;
  thread_local std::vector<double> upstream;
  delta.assign(grad_output.begin(), grad_output.end());
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const Layer& l = layers_[i];
    const auto& in = tape.activations[i];
    const double* w = params_.data() + l.weight_offset;
    double* gw = grads.params_.data() + l.weight_offset;
    double* gb = grads.params_.data() + l.bias_offset;
    if (i > 0) upstream.assign(l.in, 0.0);
    for (std::size_t o = 0; o < l.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      gb[o] += d;
      k.axpy(d, in.data(), gw + o * l.in, l.in);
      if (i > 0) k.axpy(d, w + o * l.in, upstream.data(), l.in);
    }
    if (i == 0) break;
    // Previous layer is tanh: d/dz tanh = 1 - a^2.
    delta.resize(l.in);
    for (std::size_t j = 0; j < l.in; ++j) delta[j] = upstream[j] * (1.0 - in[j] * in[j]);
  }
}

std::vector<double> orthogonal_matrix(std::size_t rows, std::size_t cols, double gain, std::mt19937_64& rng) {
  // Orthonormalize the shorter dimension's vectors with modified Gram-Schmidt.
  const bool transpose = rows > cols;
  const std::size_t n_vec = transpose ? cols : rows;
  const std::size_t dim = transpose ? rows : cols;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> q(n_vec * dim);
  for (double& v : q) v = gauss(rng);
  for (std::size_t i = 0; i < n_vec; ++i) {
    double* vi = q.data() + i * dim;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < i; ++j) {
        const double* vj = q.data() + j * dim;
        double proj = 0.0;
        for (std::size_t d = 0; d < dim; ++d) proj += vi[d] * vj[d];
        for (std::size_t d = 0; d < dim; ++d) vi[d] -= proj * vj[d];
      }
    }
    double norm = 0.0;
    for (std::size_t d = 0; d < dim; ++d) norm += vi[d] * vi[d];
    norm = std::sqrt(norm);
    if (norm == 0.0) throw std::runtime_error("orthogonal_matrix: degenerate draw");
    for (std::size_t d = 0; d < dim; ++d) vi[d] /= norm;
  }
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out[r * cols + c] = gain * (transpose ? q[c * dim + r] : q[r * dim + c]);
    }
  }
  return out;
}

void softmax(std::span<const double> logits, std::span<double> probs) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - mx);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
}

void log_softmax(std::span<const double> logits, std::span<double> logp) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - mx);
  const double lse = mx + std::log(sum);
  for (std::size_t i = 0; i < logits.size(); ++i) logp[i] = logits[i] - lse;
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace ho::ppo
