#pragma once

#include <span>
#include <vector>

#include "dstack/matrix.hpp"
#include "dstack/node.hpp"

namespace dstack {

struct Decision {
  std::vector<double> scores;  // softmax probabilities
  std::size_t label = 0;       // lowest index attaining the max score
  double margin = 0.0;         // top score minus runner-up (0 for one class)

  friend bool operator==(const Decision&, const Decision&) = default;
};

// Numerically stable softmax followed by lowest-index argmax.
Decision make_decision(std::span<const double> logits);

// Linear softmax read-out over the pooled features. Feature slot s is the
// ablatable node NodeId::engine_feature(s); class score c is the recorded-only
// node NodeId::engine_score(c).
struct EngineSpec {
  Matrix weights;  // num_classes x feature_dim
  std::vector<double> biases;

  std::size_t num_classes() const { return weights.rows; }
  std::size_t feature_dim() const { return weights.cols; }
  void validate() const;

  friend bool operator==(const EngineSpec&, const EngineSpec&) = default;
};

struct ReadoutOutput {
  Decision decision;
  Activations activations;  // feature slots (after clamping) then scores
};

ReadoutOutput decision_readout(const EngineSpec& engine, std::span<const double> features,
                               const AblationMask& mask = {});

}  // namespace dstack
