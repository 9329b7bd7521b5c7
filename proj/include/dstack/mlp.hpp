#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dstack/matrix.hpp"
#include "dstack/node.hpp"

namespace dstack {

enum class Activation : std::uint8_t { Relu, Identity };

// Fully connected feedforward network. Hidden layers use the listed
// activation; the output layer is linear.
//
// Instrumented nodes are hidden and output units. Unit `u` of the non-input
// layer `l` (0 = first hidden layer) is NodeId::pool(model, l, u).
struct MlpSpec {
  std::vector<std::size_t> layer_sizes;       // input width first, >= 2 entries
  std::vector<Activation> hidden_activations; // layer_sizes.size() - 2 entries
  std::vector<Matrix> weights;                // weights[l]: layer_sizes[l+1] x layer_sizes[l]
  std::vector<std::vector<double>> biases;    // biases[l]: layer_sizes[l+1]

  // Throws ConfigError when shapes do not chain.
  void validate() const;

  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t output_dim() const { return layer_sizes.back(); }
  std::size_t num_weight_layers() const { return layer_sizes.size() - 1; }
  std::size_t num_nodes() const;

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

struct MlpOutput {
  std::vector<double> output;
  Activations activations;  // every hidden and output unit, canonical order
};

// Feedforward pass. Masked units have their post-activation value clamped to
// exactly 0 before propagating and are recorded as 0. `mask` may only hold
// nodes of `model_index`.
MlpOutput mlp_forward(const MlpSpec& spec, std::span<const double> input, const AblationMask& mask = {},
                      std::uint32_t model_index = 0);

struct MlpGradient {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
};

// Loss is 1/2 ||y - t||^2 averaged over the batch.
double mlp_loss(const MlpSpec& spec, std::span<const std::vector<double>> inputs,
                std::span<const std::vector<double>> targets);

// Analytic gradient of mlp_loss by backpropagation.
MlpGradient mlp_gradient(const MlpSpec& spec, std::span<const std::vector<double>> inputs,
                         std::span<const std::vector<double>> targets);

struct LabeledSamples {
  std::vector<std::vector<double>> features;
  std::vector<std::size_t> labels;
};

struct TrainParams {
  double learning_rate = 0.1;
  std::size_t epochs = 100;
  std::size_t batch_size = 0;  // 0 means full batch
};

// Weights and biases uniform in [-0.5, 0.5], drawn layer by layer (weights
// row-major, then biases) from Rng(seed).
MlpSpec mlp_init(const std::vector<std::size_t>& layer_sizes, Activation hidden, std::uint64_t seed);

// Mini-batch SGD on one-hot targets. The sample order is reshuffled every
// epoch from a stream derived from `seed`, so equal inputs give bitwise equal
// specs. epochs == 0 returns mlp_init(...) unchanged.
MlpSpec mlp_train(const std::vector<std::size_t>& layer_sizes, Activation hidden, const LabeledSamples& data,
                  const TrainParams& params, std::uint64_t seed);

std::vector<double> one_hot(std::size_t label, std::size_t width);

}  // namespace dstack
