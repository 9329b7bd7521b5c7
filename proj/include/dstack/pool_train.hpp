#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "dstack/pool.hpp"

namespace dstack {

struct MlpTrainSpec {
  std::vector<std::size_t> hidden;  // hidden layer widths
  Activation activation = Activation::Relu;
  TrainParams params;
};

struct KMeansTrainSpec {
  std::size_t k = 2;
  std::size_t max_iters = 100;
};

using ModelTrainSpec = std::variant<MlpTrainSpec, KMeansTrainSpec>;

struct PoolTrainSpec {
  std::vector<ModelTrainSpec> models;
  TrainParams engine;
};

// Fits each member on the samples (MLPs supervised to one-hot targets of
// num_classes, k-means unsupervised), then fits the engine as a linear layer
// on the pooled features with the same MSE/SGD machinery. Member i uses seed
// derive_seed(seed, 100 + i); the engine uses derive_seed(seed, 99).
PoolConfig train_pool(const PoolTrainSpec& spec, const LabeledSamples& samples, std::size_t num_classes,
                      std::uint64_t seed);

// Pooled feature vector of an unablated forward pass.
std::vector<double> pooled_features(const PoolConfig& config, std::span<const double> input);

double accuracy(const PoolConfig& config, const LabeledSamples& samples);

}  // namespace dstack
