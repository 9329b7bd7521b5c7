#pragma once

#include <filesystem>

#include "dstack/pool.hpp"
#include "json.hpp"

namespace dstack {

inline constexpr int kPoolFormatVersion = 1;

// Pool document:
//   {"format_version": 1, "seed": u64,
//    "models": [{"type": "mlp", "layer_sizes": [...], "activations": ["relu"|"identity", ...],
//                "weights": [[[...]...]...], "biases": [[...]...]},
//               {"type": "kmeans", "centroids": [[...]...]}],
//    "engine": {"weights": [[...]...], "biases": [...]}}
// Reals are written as shortest round-trip decimals, so load(save(x)) == x
// bit for bit for every finite double.
nlohmann::json pool_to_json(const PoolConfig& config);
PoolConfig pool_from_json(const nlohmann::json& doc);

void save_pool(const PoolConfig& config, const std::filesystem::path& path);
PoolConfig load_pool(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace dstack
