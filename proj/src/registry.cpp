#include "dstack/registry.hpp"

#include <algorithm>

#include "dstack/errors.hpp"
#include "dstack/pool.hpp"

namespace dstack {

NodeRegistry::NodeRegistry(std::vector<NodeInfo> nodes) : nodes_(std::move(nodes)) {
  std::sort(nodes_.begin(), nodes_.end(), [](const NodeInfo& a, const NodeInfo& b) { return a.id < b.id; });
  auto dup = std::adjacent_find(nodes_.begin(), nodes_.end(),
                                [](const NodeInfo& a, const NodeInfo& b) { return a.id == b.id; });
  if (dup != nodes_.end()) throw InvariantError("duplicate node " + to_string(dup->id) + " in registry");
}

std::optional<NodeInfo> NodeRegistry::find(const NodeId& id) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                             [](const NodeInfo& info, const NodeId& key) { return info.id < key; });
  if (it == nodes_.end() || it->id != id) return std::nullopt;
  return *it;
}

bool NodeRegistry::is_ablatable(const NodeId& id) const {
  auto info = find(id);
  return info && info->ablatable;
}

std::vector<NodeId> NodeRegistry::ablatable_nodes() const {
  std::vector<NodeId> out;
  for (const auto& n : nodes_) {
    if (n.ablatable) out.push_back(n.id);
  }
  return out;
}

std::size_t NodeRegistry::ablatable_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const NodeInfo& n) { return n.ablatable; }));
}

NodeRegistry register_nodes(const PoolConfig& config) {
  config.validate();
  std::vector<NodeInfo> nodes;
  for (std::size_t i = 0; i < config.models.size(); ++i) {
    const auto index = static_cast<std::uint32_t>(i);
    if (const auto* mlp = std::get_if<MlpSpec>(&config.models[i])) {
      for (std::uint32_t l = 0; l < mlp->num_weight_layers(); ++l) {
        for (std::uint32_t u = 0; u < mlp->layer_sizes[l + 1]; ++u) {
          nodes.push_back({NodeId::pool(index, l, u), NodeFamily::MlpUnit, true});
        }
      }
    } else {
      const auto& km = std::get<KMeansSpec>(config.models[i]);
      for (std::uint32_t j = 0; j < km.k(); ++j) nodes.push_back({NodeId::pool(index, 0, j), NodeFamily::Centroid, true});
    }
  }
  for (std::uint32_t s = 0; s < config.engine.feature_dim(); ++s) {
    nodes.push_back({NodeId::engine_feature(s), NodeFamily::EngineFeature, true});
  }
  for (std::uint32_t c = 0; c < config.engine.num_classes(); ++c) {
    nodes.push_back({NodeId::engine_score(c), NodeFamily::EngineScore, false});
  }
  return NodeRegistry(std::move(nodes));
}

}  // namespace dstack
