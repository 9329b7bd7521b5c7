#include "dstack/pool.hpp"

#include <string>

#include "dstack/errors.hpp"
#include "dstack/hash.hpp"

namespace dstack {

namespace {

template <typename... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <typename... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

}  // namespace

std::size_t output_dim(const ModelSpec& model) {
  return std::visit(Overloaded{[](const MlpSpec& m) { return m.output_dim(); },
                               [](const KMeansSpec& m) { return m.k(); }},
                    model);
}

std::size_t input_dim(const ModelSpec& model) {
  return std::visit(Overloaded{[](const MlpSpec& m) { return m.input_dim(); },
                               [](const KMeansSpec& m) { return m.dim(); }},
                    model);
}

void PoolConfig::validate() const {
  if (models.empty()) throw ConfigError("the model pool is empty");
  for (const auto& m : models) std::visit([](const auto& spec) { spec.validate(); }, m);
  const auto d = dstack::input_dim(models.front());
  for (std::size_t i = 1; i < models.size(); ++i) {
    if (dstack::input_dim(models[i]) != d) {
      throw ConfigError("pool model " + std::to_string(i) + " expects input dimension " +
                        std::to_string(dstack::input_dim(models[i])) + ", model 0 expects " + std::to_string(d));
    }
  }
  engine.validate();
  if (engine.feature_dim() != pooled_feature_dim()) {
    throw ConfigError("engine expects " + std::to_string(engine.feature_dim()) + " pooled features, pool produces " +
                      std::to_string(pooled_feature_dim()));
  }
}

std::size_t PoolConfig::input_dim() const { return models.empty() ? 0 : dstack::input_dim(models.front()); }

std::size_t PoolConfig::pooled_feature_dim() const {
  std::size_t total = 0;
  for (const auto& m : models) total += output_dim(m);
  return total;
}

std::uint64_t config_digest(const PoolConfig& config) {
  Fnv1a64 h;
  h.bytes("dstack-pool-v1");
  h.u64(config.models.size());
  for (const auto& m : config.models) {
    std::visit(Overloaded{[&](const MlpSpec& s) {
                            h.byte(0);
                            h.u64(s.layer_sizes.size());
                            for (auto v : s.layer_sizes) h.u64(v);
                            for (auto a : s.hidden_activations) h.byte(static_cast<std::uint8_t>(a));
                            for (const auto& w : s.weights)
                              for (double x : w.data) h.f64(x);
                            for (const auto& b : s.biases)
                              for (double x : b) h.f64(x);
                          },
                          [&](const KMeansSpec& s) {
                            h.byte(1);
                            h.u64(s.k());
                            h.u64(s.dim());
                            for (const auto& c : s.centroids)
                              for (double x : c) h.f64(x);
                          }},
               m);
  }
  h.u64(config.engine.weights.rows);
  h.u64(config.engine.weights.cols);
  for (double x : config.engine.weights.data) h.f64(x);
  for (double x : config.engine.biases) h.f64(x);
  h.u64(config.seed);
  return h.digest();
}

void check_mask(const PoolConfig& config, const AblationMask& mask) {
  for (const auto& n : mask) {
    bool registered = false;
    bool ablatable = false;
    if (n.component == Component::PoolModel) {
      if (n.model_index < config.models.size()) {
        const auto& m = config.models[n.model_index];
        if (const auto* mlp = std::get_if<MlpSpec>(&m)) {
          registered = n.layer < mlp->num_weight_layers() && n.unit < mlp->layer_sizes[n.layer + 1];
        } else {
          registered = n.layer == 0 && n.unit < std::get<KMeansSpec>(m).k();
        }
      }
      ablatable = registered;
    } else if (n.model_index == 0) {
      if (n.layer == kEngineFeatureLayer) {
        registered = ablatable = n.unit < config.engine.feature_dim();
      } else if (n.layer == kEngineScoreLayer) {
        registered = n.unit < config.engine.num_classes();
      }
    }
    if (!registered) throw MaskError("mask node " + to_string(n) + " is not registered in this pool");
    if (!ablatable) throw MaskError("mask node " + to_string(n) + " is recorded but not ablatable");
  }
}

PoolResult pool_forward(const PoolConfig& config, std::span<const double> input, const AblationMask& mask) {
  if (input.size() != config.input_dim()) {
    throw ConfigError("input has dimension " + std::to_string(input.size()) + ", pool expects " +
                      std::to_string(config.input_dim()));
  }
  check_mask(config, mask);

  PoolResult result;
  std::vector<double> pooled;
  pooled.reserve(config.pooled_feature_dim());
  for (std::size_t i = 0; i < config.models.size(); ++i) {
    const auto index = static_cast<std::uint32_t>(i);
    const auto sub = mask.restricted_to(Component::PoolModel, index);
    if (const auto* mlp = std::get_if<MlpSpec>(&config.models[i])) {
      auto out = mlp_forward(*mlp, input, sub, index);
      pooled.insert(pooled.end(), out.output.begin(), out.output.end());
      result.records.insert(result.records.end(), out.activations.begin(), out.activations.end());
    } else {
      const auto& km = std::get<KMeansSpec>(config.models[i]);
      try {
        auto out = kmeans_assign(km, input, sub, index);
        pooled.insert(pooled.end(), out.one_hot.begin(), out.one_hot.end());
        result.records.insert(result.records.end(), out.activations.begin(), out.activations.end());
      } catch (const TotalAblationError&) {
        pooled.insert(pooled.end(), km.k(), 0.0);
        for (std::uint32_t j = 0; j < km.k(); ++j) result.records.push_back({NodeId::pool(index, 0, j), 0.0});
      }
    }
  }
  auto readout = decision_readout(config.engine, pooled, mask.restricted_to(Component::DecisionEngine, 0));
  result.records.insert(result.records.end(), readout.activations.begin(), readout.activations.end());
  result.decision = std::move(readout.decision);
  return result;
}

DecideResult pool_decide(const PoolConfig& config, std::span<const double> input, const AblationMask& mask) {
  config.validate();
  const auto digest = input_digest(input);
  auto forward = pool_forward(config, input, mask);
  DecideResult out;
  out.decision = forward.decision;
  out.trace.input_digest = digest;
  out.trace.seed = config.seed;
  out.trace.mask_applied = mask;
  out.trace.decision_id = make_decision_id(config_digest(config), digest, mask, config.seed);
  out.trace.records = std::move(forward.records);
  out.trace.decision = std::move(forward.decision);
  return out;
}

}  // namespace dstack
