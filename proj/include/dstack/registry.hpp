#pragma once

#include <optional>
#include <vector>

#include "dstack/node.hpp"

namespace dstack {

struct PoolConfig;

enum class NodeFamily { MlpUnit, Centroid, EngineFeature, EngineScore };

struct NodeInfo {
  NodeId id;
  NodeFamily family;
  bool ablatable;
};

// Every instrumented node of a pool, sorted canonically.
class NodeRegistry {
 public:
  explicit NodeRegistry(std::vector<NodeInfo> nodes);

  std::span<const NodeInfo> nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  std::optional<NodeInfo> find(const NodeId& id) const;
  bool contains(const NodeId& id) const { return find(id).has_value(); }
  bool is_ablatable(const NodeId& id) const;
  std::vector<NodeId> ablatable_nodes() const;
  std::size_t ablatable_count() const;

 private:
  std::vector<NodeInfo> nodes_;
};

NodeRegistry register_nodes(const PoolConfig& config);

}  // namespace dstack
