#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "dstack/explainer.hpp"
#include "dstack/pool_train.hpp"
#include "json.hpp"

namespace dstack {

// Declarative JSON run description. Relative paths resolve against the
// directory holding the config file. Example:
//
//   {
//     "dataset": "blobs.csv",
//     "seed": 7,
//     "pool": {
//       "models": [
//         {"type": "mlp", "hidden": [8], "activation": "relu",
//          "learning_rate": 0.1, "epochs": 200, "batch_size": 16},
//         {"type": "kmeans", "k": 4, "max_iters": 100}
//       ],
//       "engine": {"learning_rate": 0.1, "epochs": 200, "batch_size": 16}
//     },
//     "strategy": "top_k:0.1",
//     "controls": 20,
//     "paths": {"model": "out/model.json", "traces": "out/traces.jsonl",
//               "report": "out/report.json"}
//   }
struct RunConfig {
  std::optional<std::filesystem::path> dataset;
  std::optional<PoolTrainSpec> pool;
  EngramStrategy strategy = EngramStrategy::top_k(kDefaultTopKFraction);
  std::size_t controls = 20;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> model_path;
  std::optional<std::filesystem::path> traces_path;
  std::optional<std::filesystem::path> report_path;
};

// Rejects unknown keys and ill-typed values with ConfigError.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace dstack
