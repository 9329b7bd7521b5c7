#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "dstack/engine.hpp"
#include "dstack/kmeans.hpp"
#include "dstack/mlp.hpp"
#include "dstack/trace.hpp"

namespace dstack {

using ModelSpec = std::variant<MlpSpec, KMeansSpec>;

// Width of the feature block a model contributes to the pooled vector:
// the MLP output width, or k for a k-means one-hot.
std::size_t output_dim(const ModelSpec& model);
std::size_t input_dim(const ModelSpec& model);

// The whole decision stack: model pool at the base, read-out engine on top.
// Every member sees the same input vector.
struct PoolConfig {
  std::vector<ModelSpec> models;
  EngineSpec engine;
  std::uint64_t seed = 0;

  // Throws ConfigError on an empty pool, mismatched input dimensions, or an
  // engine whose width differs from the pooled feature dimension.
  void validate() const;
  std::size_t input_dim() const;
  std::size_t pooled_feature_dim() const;

  friend bool operator==(const PoolConfig&, const PoolConfig&) = default;
};

// Structural hash of every weight, centroid, shape and the seed.
std::uint64_t config_digest(const PoolConfig& config);

struct PoolResult {
  Decision decision;
  Activations records;  // every registered node, canonical order
};

// One decision under `mask`, without trace identity. This is the replay path
// used by the explainer. A k-means member whose centroids are all masked
// contributes an all-zero block.
PoolResult pool_forward(const PoolConfig& config, std::span<const double> input, const AblationMask& mask = {});

struct DecideResult {
  Decision decision;
  ActivationTrace trace;
};

DecideResult pool_decide(const PoolConfig& config, std::span<const double> input, const AblationMask& mask = {});

// Throws MaskError unless every node is registered and ablatable.
void check_mask(const PoolConfig& config, const AblationMask& mask);

}  // namespace dstack
