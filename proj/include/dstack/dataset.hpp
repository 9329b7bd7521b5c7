#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "dstack/mlp.hpp"

namespace dstack {

// Numeric CSV with a header row and an integer "label" column; every other
// column is a feature, kept in file order.
struct DatasetTable {
  std::vector<std::string> feature_names;
  LabeledSamples samples;
  std::size_t num_classes = 0;

  std::size_t rows() const { return samples.features.size(); }
  std::size_t dim() const { return feature_names.size(); }
};

// Errors are DataError with the 1-based data row (header excluded) and the
// column name.
DatasetTable parse_dataset(std::istream& in, const std::string& source = "<csv>");
DatasetTable load_dataset(const std::filesystem::path& path);

}  // namespace dstack
