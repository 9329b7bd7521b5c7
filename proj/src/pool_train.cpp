#include "dstack/pool_train.hpp"

#include "dstack/errors.hpp"
#include "dstack/rng.hpp"

namespace dstack {

std::vector<double> pooled_features(const PoolConfig& config, std::span<const double> input) {
  auto result = pool_forward(config, input);
  std::vector<double> out;
  for (const auto& r : result.records) {
    if (r.node.component == Component::DecisionEngine && r.node.layer == kEngineFeatureLayer) out.push_back(r.value);
  }
  return out;
}

PoolConfig train_pool(const PoolTrainSpec& spec, const LabeledSamples& samples, std::size_t num_classes,
                      std::uint64_t seed) {
  if (spec.models.empty()) throw ConfigError("the model pool is empty");
  if (samples.features.empty()) throw DataError("training set is empty");
  if (num_classes == 0) throw DataError("training set has no classes");
  const std::size_t d = samples.features.front().size();

  PoolConfig config;
  config.seed = seed;
  for (std::size_t i = 0; i < spec.models.size(); ++i) {
    const auto member_seed = derive_seed(seed, 100 + i);
    if (const auto* m = std::get_if<MlpTrainSpec>(&spec.models[i])) {
      std::vector<std::size_t> sizes{d};
      sizes.insert(sizes.end(), m->hidden.begin(), m->hidden.end());
      sizes.push_back(num_classes);
      config.models.emplace_back(mlp_train(sizes, m->activation, samples, m->params, member_seed));
    } else {
      const auto& k = std::get<KMeansTrainSpec>(spec.models[i]);
      config.models.emplace_back(kmeans_fit(samples.features, k.k, member_seed, k.max_iters));
    }
  }

  // Placeholder engine so the pool can be evaluated while collecting features.
  const std::size_t pooled = config.pooled_feature_dim();
  config.engine.weights = Matrix(num_classes, pooled);
  config.engine.biases.assign(num_classes, 0.0);

  LabeledSamples engine_data;
  engine_data.labels = samples.labels;
  engine_data.features.reserve(samples.features.size());
  for (const auto& x : samples.features) engine_data.features.push_back(pooled_features(config, x));

  auto linear = mlp_train({pooled, num_classes}, Activation::Identity, engine_data, spec.engine, derive_seed(seed, 99));
  config.engine.weights = std::move(linear.weights.front());
  config.engine.biases = std::move(linear.biases.front());
  config.validate();
  return config;
}

double accuracy(const PoolConfig& config, const LabeledSamples& samples) {
  if (samples.features.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < samples.features.size(); ++i) {
    if (pool_forward(config, samples.features[i]).decision.label == samples.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.features.size());
}

}  // namespace dstack
