#include "dstack/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dstack/errors.hpp"

namespace dstack {

Decision make_decision(std::span<const double> logits) {
  if (logits.empty()) throw ConfigError("decision needs at least one class");
  const double top = *std::max_element(logits.begin(), logits.end());
  Decision d;
  d.scores.resize(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    d.scores[i] = std::exp(logits[i] - top);
    total += d.scores[i];
  }
  for (auto& s : d.scores) s /= total;

  d.label = 0;
  for (std::size_t i = 1; i < d.scores.size(); ++i) {
    if (d.scores[i] > d.scores[d.label]) d.label = i;
  }
  double runner_up = -1.0;
  for (std::size_t i = 0; i < d.scores.size(); ++i) {
    if (i != d.label) runner_up = std::max(runner_up, d.scores[i]);
  }
  d.margin = runner_up < 0.0 ? 0.0 : d.scores[d.label] - runner_up;
  return d;
}

void EngineSpec::validate() const {
  if (weights.rows == 0) throw ConfigError("engine needs at least one class");
  if (weights.data.size() != weights.rows * weights.cols) throw ConfigError("engine weight matrix is malformed");
  if (biases.size() != weights.rows) throw ConfigError("engine bias length does not match the class count");
}

ReadoutOutput decision_readout(const EngineSpec& engine, std::span<const double> features, const AblationMask& mask) {
  if (features.size() != engine.feature_dim()) {
    throw ConfigError("engine received " + std::to_string(features.size()) + " pooled features, expected " +
                      std::to_string(engine.feature_dim()));
  }
  for (const auto& n : mask) {
    if (n.component != Component::DecisionEngine || n.model_index != 0 || n.layer != kEngineFeatureLayer ||
        n.unit >= engine.feature_dim()) {
      throw MaskError("mask node " + to_string(n) + " is not an engine feature slot");
    }
  }

  ReadoutOutput out;
  out.activations.reserve(engine.feature_dim() + engine.num_classes());
  std::vector<double> x(features.begin(), features.end());
  for (std::size_t s = 0; s < x.size(); ++s) {
    const auto id = NodeId::engine_feature(static_cast<std::uint32_t>(s));
    if (mask.contains(id)) x[s] = 0.0;
    out.activations.push_back({id, x[s]});
  }
  std::vector<double> logits(engine.num_classes());
  for (std::size_t c = 0; c < logits.size(); ++c) {
    double acc = engine.biases[c];
    for (std::size_t s = 0; s < x.size(); ++s) acc += engine.weights(c, s) * x[s];
    logits[c] = acc;
  }
  out.decision = make_decision(logits);
  for (std::size_t c = 0; c < logits.size(); ++c) {
    out.activations.push_back({NodeId::engine_score(static_cast<std::uint32_t>(c)), out.decision.scores[c]});
  }
  return out;
}

}  // namespace dstack
