#include "dstack/node.hpp"

#include <algorithm>
#include <charconv>

#include "dstack/errors.hpp"

namespace dstack {

std::string to_string(const NodeId& id) {
  std::string out = id.component == Component::PoolModel ? "pool:" : "engine:";
  out += std::to_string(id.model_index);
  out += ':';
  out += std::to_string(id.layer);
  out += ':';
  out += std::to_string(id.unit);
  return out;
}

namespace {

std::uint32_t parse_field(std::string_view text, std::string_view whole) {
  std::uint32_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ArgumentError("malformed node id '" + std::string(whole) + "'");
  }
  return value;
}

}  // namespace

NodeId parse_node_id(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto colon = text.find(':', start);
    parts.push_back(text.substr(start, colon == std::string_view::npos ? colon : colon - start));
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  if (parts.size() != 4) {
    throw ArgumentError("malformed node id '" + std::string(text) + "'");
  }
  NodeId id;
  if (parts[0] == "pool") {
    id.component = Component::PoolModel;
  } else if (parts[0] == "engine") {
    id.component = Component::DecisionEngine;
  } else {
    throw ArgumentError("malformed node id '" + std::string(text) + "'");
  }
  id.model_index = parse_field(parts[1], text);
  id.layer = parse_field(parts[2], text);
  id.unit = parse_field(parts[3], text);
  return id;
}

AblationMask::AblationMask(std::initializer_list<NodeId> nodes)
    : AblationMask(std::vector<NodeId>(nodes)) {}

AblationMask::AblationMask(std::vector<NodeId> nodes) : nodes_(std::move(nodes)) {
  std::sort(nodes_.begin(), nodes_.end());
  nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
}

bool AblationMask::contains(const NodeId& id) const {
  return std::binary_search(nodes_.begin(), nodes_.end(), id);
}

void AblationMask::insert(const NodeId& id) {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id);
  if (it == nodes_.end() || *it != id) nodes_.insert(it, id);
}

void AblationMask::erase(const NodeId& id) {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id);
  if (it != nodes_.end() && *it == id) nodes_.erase(it);
}

AblationMask AblationMask::restricted_to(Component component, std::uint32_t model_index) const {
  AblationMask out;
  for (const auto& n : nodes_) {
    if (n.component == component && n.model_index == model_index) out.nodes_.push_back(n);
  }
  return out;
}

}  // namespace dstack
