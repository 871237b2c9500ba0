#pragma once

// Fully connected tanh network with reverse-mode gradients.
//
// Parameters live in one flat buffer (layer by layer, weights row-major
// [out x in] followed by biases) so optimizers and checkpoints can treat a
// network as a single vector.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ho::ppo {

class Mlp {
 public:
  struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;
  };

  // Activations of one forward pass, kept for backward().
  struct Tape {
    std::vector<std::vector<double>> activations;  // [0] = input, back() = output
  };

  Mlp() = default;
  // sizes = {input, hidden..., output}; all parameters zero.
  explicit Mlp(std::vector<std::size_t> sizes);

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  const std::vector<Layer>& layers() const { return layers_; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> weights(std::size_t layer);
  std::span<double> bias(std::size_t layer);
  std::span<const double> weights(std::size_t layer) const;
  std::span<const double> bias(std::size_t layer) const;

  // "layer2.weight[3,17]" style path for a flat index.
  std::string parameter_name(std::size_t flat_index) const;

  void set_zero();

  // Orthogonal init: hidden layers with hidden_gain, the output layer with
  // output_gain, zero biases.
  void init_orthogonal(std::mt19937_64& rng, double hidden_gain, double output_gain);

  void forward(std::span<const double> x, std::span<double> y) const;
  void forward(std::span<const double> x, Tape& tape) const;

  // Accumulates dL/dparams into `grads` (same shape) given dL/doutput.
  void backward(const Tape& tape, std::span<const double> grad_output, Mlp& grads) const;

  bool same_shape(const Mlp& other) const { return sizes_ == other.sizes_; }

  bool operator==(const Mlp& other) const { return sizes_ == other.sizes_ && params_ == other.params_; }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<Layer> layers_;
  std::vector<double> params_;
  std::size_t widest_ = 0;
};

// Rows of a [rows x cols] matrix with orthonormal rows (rows <= cols) or
// orthonormal columns (rows > cols), scaled by gain.
std::vector<double> orthogonal_matrix(std::size_t rows, std::size_t cols, double gain, std::mt19937_64& rng);

// Numerically stable softmax / log-softmax.
void softmax(std::span<const double> logits, std::span<double> probs);
void log_softmax(std::span<const double> logits, std::span<double> logp);

// Shannon entropy in nats; 0 log 0 = 0.
double entropy(std::span<const double> probs);

}  // namespace ho::ppo
