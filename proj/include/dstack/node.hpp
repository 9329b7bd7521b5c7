#pragma once

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dstack {

enum class Component : std::uint8_t { PoolModel = 0, DecisionEngine = 1 };

// Address of one instrumented node. The defaulted ordering is lexicographic
// over (component, model_index, layer, unit) and is the canonical order used
// for iteration and tie-breaking everywhere.
struct NodeId {
  Component component = Component::PoolModel;
  std::uint32_t model_index = 0;
  std::uint32_t layer = 0;
  std::uint32_t unit = 0;

  friend auto operator<=>(const NodeId&, const NodeId&) = default;

  static NodeId pool(std::uint32_t model, std::uint32_t layer, std::uint32_t unit) {
    return {Component::PoolModel, model, layer, unit};
  }
  static NodeId engine_feature(std::uint32_t slot) { return {Component::DecisionEngine, 0, 0, slot}; }
  static NodeId engine_score(std::uint32_t cls) { return {Component::DecisionEngine, 0, 1, cls}; }
};

// Textual form "pool:<model>:<layer>:<unit>" or "engine:0:<layer>:<unit>".
std::string to_string(const NodeId& id);
NodeId parse_node_id(std::string_view text);

// Engine layer holding the ablatable pooled-feature slots.
inline constexpr std::uint32_t kEngineFeatureLayer = 0;
// Engine layer holding the recorded-only class scores.
inline constexpr std::uint32_t kEngineScoreLayer = 1;

// Set of nodes to inactivate during a forward pass, kept sorted and unique.
class AblationMask {
 public:
  AblationMask() = default;
  AblationMask(std::initializer_list<NodeId> nodes);
  explicit AblationMask(std::vector<NodeId> nodes);

  bool contains(const NodeId& id) const;
  bool empty() const { return nodes_.empty(); }
  std::size_t size() const { return nodes_.size(); }
  std::span<const NodeId> nodes() const { return nodes_; }
  auto begin() const { return nodes_.begin(); }
  auto end() const { return nodes_.end(); }

  void insert(const NodeId& id);
  void erase(const NodeId& id);

  // Nodes belonging to one pool model or to the engine.
  AblationMask restricted_to(Component component, std::uint32_t model_index) const;

  friend bool operator==(const AblationMask&, const AblationMask&) = default;

 private:
  std::vector<NodeId> nodes_;
};

struct NodeActivation {
  NodeId node;
  double value = 0.0;

  friend bool operator==(const NodeActivation&, const NodeActivation&) = default;
};

using Activations = std::vector<NodeActivation>;

}  // namespace dstack
