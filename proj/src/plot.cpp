#include "dstack/plot.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dstack {

std::string activation_svg(const ActivationTrace& trace, const NodeRegistry& registry, const AblationMask& engram) {
  std::vector<NodeActivation> bars;
  for (const auto& r : trace.records) {
    if (registry.is_ablatable(r.node)) bars.push_back(r);
  }
  double peak = 0.0;
  for (const auto& b : bars) peak = std::max(peak, std::abs(b.value));
  if (peak == 0.0) peak = 1.0;

  constexpr int kRow = 18;
  constexpr int kLabel = 140;
  constexpr int kHalf = 200;
  const int height = kRow * static_cast<int>(bars.size()) + 40;
  const int axis = kLabel + kHalf;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kLabel + 2 * kHalf + 20 << "\" height=\"" << height
     << "\" font-family=\"monospace\" font-size=\"11\">\n";
  os << "<text x=\"4\" y=\"14\">decision " << trace.decision_id << " label " << trace.decision.label << "</text>\n";
  os << "<line x1=\"" << axis << "\" y1=\"24\" x2=\"" << axis << "\" y2=\"" << height - 8
     << "\" stroke=\"#444\"/>\n";
  int y = 28;
  for (const auto& b : bars) {
    const int w = static_cast<int>(std::lround(std::abs(b.value) / peak * kHalf));
    const int x = b.value < 0 ? axis - w : axis;
    const char* fill = engram.contains(b.node) ? "#c0392b" : "#7f8c8d";
    os << "<text x=\"4\" y=\"" << y + 11 << "\">" << to_string(b.node) << "</text>";
    os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << kRow - 4 << "\" fill=\""
       << fill << "\"/>\n";
    y += kRow;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace dstack
