#include "dstack/run_config.hpp"

#include <set>

#include "dstack/errors.hpp"
#include "dstack/serialize.hpp"

namespace dstack {

using nlohmann::json;

namespace {

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": unexpected value " + j.at(key).dump());
  }
}

TrainParams parse_train_params(const json& j, const std::string& where) {
  TrainParams p;
  p.learning_rate = get<double>(j, "learning_rate", where, p.learning_rate);
  p.epochs = get<std::size_t>(j, "epochs", where, p.epochs);
  p.batch_size = get<std::size_t>(j, "batch_size", where, p.batch_size);
  if (!(p.learning_rate > 0.0)) throw ConfigError(where + ".learning_rate must be positive");
  return p;
}

PoolTrainSpec parse_pool(const json& j) {
  only_keys(j, "pool", {"models", "engine"});
  PoolTrainSpec spec;
  if (!j.contains("models") || !j.at("models").is_array() || j.at("models").empty()) {
    throw ConfigError("pool.models must be a non-empty array");
  }
  const auto& models = j.at("models");
  for (std::size_t i = 0; i < models.size(); ++i) {
    const std::string where = "pool.models[" + std::to_string(i) + "]";
    const auto& m = models[i];
    const auto type = get<std::string>(m, "type", where, "");
    if (type == "mlp") {
      only_keys(m, where, {"type", "hidden", "activation", "learning_rate", "epochs", "batch_size"});
      MlpTrainSpec s;
      s.hidden = get<std::vector<std::size_t>>(m, "hidden", where, {});
      for (auto h : s.hidden) {
        if (h == 0) throw ConfigError(where + ".hidden widths must be positive");
      }
      const auto act = get<std::string>(m, "activation", where, "relu");
      if (act == "relu") {
        s.activation = Activation::Relu;
      } else if (act == "identity") {
        s.activation = Activation::Identity;
      } else {
        throw ConfigError(where + ".activation must be 'relu' or 'identity'");
      }
      s.params = parse_train_params(m, where);
      spec.models.emplace_back(s);
    } else if (type == "kmeans") {
      only_keys(m, where, {"type", "k", "max_iters"});
      KMeansTrainSpec s;
      s.k = get<std::size_t>(m, "k", where, s.k);
      s.max_iters = get<std::size_t>(m, "max_iters", where, s.max_iters);
      if (s.k == 0) throw ConfigError(where + ".k must be >= 1");
      spec.models.emplace_back(s);
    } else {
      throw ConfigError(where + ".type must be 'mlp' or 'kmeans'");
    }
  }
  if (j.contains("engine")) {
    only_keys(j.at("engine"), "pool.engine", {"learning_rate", "epochs", "batch_size"});
    spec.engine = parse_train_params(j.at("engine"), "pool.engine");
  }
  return spec;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
  only_keys(doc, "config", {"dataset", "seed", "pool", "strategy", "controls", "paths"});
  RunConfig cfg;
  if (doc.contains("dataset")) cfg.dataset = resolve(base_dir, get<std::string>(doc, "dataset", "config", ""));
  if (doc.contains("seed")) cfg.seed = get<std::uint64_t>(doc, "seed", "config", 0);
  if (doc.contains("pool")) cfg.pool = parse_pool(doc.at("pool"));
  if (doc.contains("strategy")) {
    try {
      cfg.strategy = EngramStrategy::parse(get<std::string>(doc, "strategy", "config", ""));
    } catch (const ArgumentError& e) {
      throw ConfigError(std::string("config.strategy: ") + e.what());
    }
  }
  cfg.controls = get<std::size_t>(doc, "controls", "config", cfg.controls);
  if (doc.contains("paths")) {
    const auto& p = doc.at("paths");
    only_keys(p, "config.paths", {"model", "traces", "report"});
    if (p.contains("model")) cfg.model_path = resolve(base_dir, get<std::string>(p, "model", "paths", ""));
    if (p.contains("traces")) cfg.traces_path = resolve(base_dir, get<std::string>(p, "traces", "paths", ""));
    if (p.contains("report")) cfg.report_path = resolve(base_dir, get<std::string>(p, "report", "paths", ""));
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  json doc;
  try {
    doc = read_json_file(path);
  } catch (const StorageError& e) {
    throw ConfigError(e.what());
  }
  return parse_run_config(doc, path.parent_path());
}

}  // namespace dstack
