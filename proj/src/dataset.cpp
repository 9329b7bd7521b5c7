#include "dstack/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "dstack/errors.hpp"

namespace dstack {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

bool blank(std::string_view line) { return trim(line).empty(); }

}  // namespace

DatasetTable parse_dataset(std::istream& in, const std::string& source) {
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!blank(line)) {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw DataError(source + ": empty file");

  const auto header = split(line);
  const auto label_it = std::find(header.begin(), header.end(), "label");
  if (label_it == header.end()) throw DataError(source + ": missing 'label' column");
  if (std::count(header.begin(), header.end(), "label") > 1) throw DataError(source + ": duplicate 'label' column");
  const auto label_col = static_cast<std::size_t>(label_it - header.begin());

  DatasetTable table;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_col) table.feature_names.push_back(header[c]);
  }

  std::size_t row = 0;
  std::size_t max_label = 0;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    ++row;
    const auto cells = split(line);
    const std::string where = source + ": row " + std::to_string(row);
    if (cells.size() != header.size()) {
      throw DataError(where + ": expected " + std::to_string(header.size()) + " cells, found " +
                      std::to_string(cells.size()));
    }
    std::vector<double> features;
    features.reserve(header.size() - 1);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto& cell = cells[c];
      const std::string at = where + ", column '" + header[c] + "'";
      if (c == label_col) {
        std::size_t label = 0;
        auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), label);
        if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size()) {
          throw DataError(at + ": label '" + cell + "' is not a non-negative integer");
        }
        table.samples.labels.push_back(label);
        max_label = std::max(max_label, label);
        continue;
      }
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw DataError(at + ": '" + cell + "' is not a number");
      }
      if (!std::isfinite(value)) throw DataError(at + ": '" + cell + "' is not finite");
      features.push_back(value);
    }
    table.samples.features.push_back(std::move(features));
  }
  if (row == 0) throw DataError(source + ": empty dataset");

  table.num_classes = max_label + 1;
  std::vector<bool> seen(table.num_classes, false);
  for (auto l : table.samples.labels) seen[l] = true;
  for (std::size_t c = 0; c < seen.size(); ++c) {
    if (!seen[c]) {
      throw DataError(source + ": labels must be dense in [0, " + std::to_string(table.num_classes) +
                      "); class " + std::to_string(c) + " never occurs");
    }
  }
  return table;
}

DatasetTable load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path.string());
  return parse_dataset(in, path.string());
}

}  // namespace dstack
