#pragma once

#include <string>

#include "dstack/explainer.hpp"

namespace dstack {

// Horizontal bar chart (SVG) of every ablatable node's unablated activation,
// with engram members drawn in red.
std::string activation_svg(const ActivationTrace& trace, const NodeRegistry& registry, const AblationMask& engram);

}  // namespace dstack
