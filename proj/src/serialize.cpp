#include "dstack/serialize.hpp"

#include <fstream>
#include <sstream>

#include "dstack/errors.hpp"

namespace dstack {

using nlohmann::json;

namespace {

const char* activation_name(Activation a) { return a == Activation::Relu ? "relu" : "identity"; }

Activation parse_activation(const json& j) {
  if (j == "relu") return Activation::Relu;
  if (j == "identity") return Activation::Identity;
  throw ConfigError("unknown activation " + j.dump());
}

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  return j.at(key);
}

template <typename T>
T as(const json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": unexpected value " + j.dump().substr(0, 80));
  }
}

}  // namespace

json pool_to_json(const PoolConfig& config) {
  json models = json::array();
  for (const auto& m : config.models) {
    if (const auto* mlp = std::get_if<MlpSpec>(&m)) {
      json acts = json::array();
      for (auto a : mlp->hidden_activations) acts.push_back(activation_name(a));
      json weights = json::array();
      for (const auto& w : mlp->weights) weights.push_back(w.to_rows());
      models.push_back(json{{"type", "mlp"},
                            {"layer_sizes", mlp->layer_sizes},
                            {"activations", acts},
                            {"weights", weights},
                            {"biases", mlp->biases}});
    } else {
      models.push_back(json{{"type", "kmeans"}, {"centroids", std::get<KMeansSpec>(m).centroids}});
    }
  }
  return json{{"format_version", kPoolFormatVersion},
              {"seed", config.seed},
              {"models", models},
              {"engine", json{{"weights", config.engine.weights.to_rows()}, {"biases", config.engine.biases}}}};
}

PoolConfig pool_from_json(const json& doc) {
  const auto version = as<int>(require(doc, "format_version", "pool"), "format_version");
  if (version != kPoolFormatVersion) {
    throw ConfigError("unsupported pool format_version " + std::to_string(version));
  }
  PoolConfig config;
  config.seed = as<std::uint64_t>(require(doc, "seed", "pool"), "seed");
  const auto& models = require(doc, "models", "pool");
  if (!models.is_array()) throw ConfigError("pool: 'models' must be an array");
  for (std::size_t i = 0; i < models.size(); ++i) {
    const std::string where = "models[" + std::to_string(i) + "]";
    const auto& m = models[i];
    const auto type = as<std::string>(require(m, "type", where), where + ".type");
    if (type == "mlp") {
      MlpSpec spec;
      spec.layer_sizes = as<std::vector<std::size_t>>(require(m, "layer_sizes", where), where + ".layer_sizes");
      for (const auto& a : require(m, "activations", where)) spec.hidden_activations.push_back(parse_activation(a));
      for (const auto& w : require(m, "weights", where)) {
        auto rows = as<std::vector<std::vector<double>>>(w, where + ".weights");
        auto mat = Matrix::from_rows(rows);
        for (const auto& r : rows) {
          if (r.size() != mat.cols) throw ConfigError(where + ": ragged weight matrix");
        }
        spec.weights.push_back(std::move(mat));
      }
      spec.biases = as<std::vector<std::vector<double>>>(require(m, "biases", where), where + ".biases");
      spec.validate();
      config.models.emplace_back(std::move(spec));
    } else if (type == "kmeans") {
      KMeansSpec spec;
      spec.centroids = as<std::vector<std::vector<double>>>(require(m, "centroids", where), where + ".centroids");
      spec.validate();
      config.models.emplace_back(std::move(spec));
    } else {
      throw ConfigError(where + ": unknown model type '" + type + "'");
    }
  }
  const auto& engine = require(doc, "engine", "pool");
  auto rows = as<std::vector<std::vector<double>>>(require(engine, "weights", "engine"), "engine.weights");
  config.engine.weights = Matrix::from_rows(rows);
  for (const auto& r : rows) {
    if (r.size() != config.engine.weights.cols) throw ConfigError("engine: ragged weight matrix");
  }
  config.engine.biases = as<std::vector<double>>(require(engine, "biases", "engine"), "engine.biases");
  config.validate();
  return config;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw StorageError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StorageError("cannot write " + path.string());
  out << text;
  if (!out) throw StorageError("failed writing " + path.string());
}

void save_pool(const PoolConfig& config, const std::filesystem::path& path) {
  write_text_file(path, pool_to_json(config).dump(2) + "\n");
}

PoolConfig load_pool(const std::filesystem::path& path) { return pool_from_json(read_json_file(path)); }

}  // namespace dstack
