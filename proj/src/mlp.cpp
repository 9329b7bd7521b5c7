#include "dstack/mlp.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "dstack/errors.hpp"
#include "dstack/rng.hpp"

namespace dstack {

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2) throw ConfigError("mlp needs at least an input and an output layer");
  for (auto s : layer_sizes) {
    if (s == 0) throw ConfigError("mlp layer sizes must be positive");
  }
  if (hidden_activations.size() != layer_sizes.size() - 2) {
    throw ConfigError("mlp needs one activation per hidden layer");
  }
  if (weights.size() != layer_sizes.size() - 1 || biases.size() != layer_sizes.size() - 1) {
    throw ConfigError("mlp weight/bias layer count does not match layer_sizes");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const auto& w = weights[l];
    if (w.rows != layer_sizes[l + 1] || w.cols != layer_sizes[l] || w.data.size() != w.rows * w.cols) {
      throw ConfigError("mlp weights[" + std::to_string(l) + "] has the wrong shape");
    }
    if (biases[l].size() != layer_sizes[l + 1]) {
      throw ConfigError("mlp biases[" + std::to_string(l) + "] has the wrong length");
    }
  }
}

std::size_t MlpSpec::num_nodes() const {
  return std::accumulate(layer_sizes.begin() + 1, layer_sizes.end(), std::size_t{0});
}

namespace {

double activate(Activation a, double z) {
  return a == Activation::Relu ? (z > 0.0 ? z : 0.0) : z;
}

double activate_derivative(Activation a, double z) {
  return a == Activation::Relu ? (z > 0.0 ? 1.0 : 0.0) : 1.0;
}

Activation layer_activation(const MlpSpec& spec, std::size_t l) {
  return l + 1 < spec.num_weight_layers() ? spec.hidden_activations[l] : Activation::Identity;
}

void check_mask(const MlpSpec& spec, const AblationMask& mask, std::uint32_t model_index) {
  for (const auto& n : mask) {
    if (n.component != Component::PoolModel || n.model_index != model_index ||
        n.layer >= spec.num_weight_layers() || n.unit >= spec.layer_sizes[n.layer + 1]) {
      throw MaskError("mask node " + to_string(n) + " does not belong to mlp model " + std::to_string(model_index));
    }
  }
}

struct ForwardCache {
  std::vector<std::vector<double>> pre;   // z per weight layer
  std::vector<std::vector<double>> post;  // post[0] = input, post[l+1] = f(z_l)
};

ForwardCache forward_cached(const MlpSpec& spec, std::span<const double> input) {
  ForwardCache c;
  c.post.emplace_back(input.begin(), input.end());
  for (std::size_t l = 0; l < spec.num_weight_layers(); ++l) {
    const auto& w = spec.weights[l];
    const auto& prev = c.post.back();
    std::vector<double> z(w.rows);
    for (std::size_t r = 0; r < w.rows; ++r) {
      double acc = spec.biases[l][r];
      for (std::size_t k = 0; k < w.cols; ++k) acc += w(r, k) * prev[k];
      z[r] = acc;
    }
    std::vector<double> a(z.size());
    const auto act = layer_activation(spec, l);
    for (std::size_t r = 0; r < z.size(); ++r) a[r] = activate(act, z[r]);
    c.pre.push_back(std::move(z));
    c.post.push_back(std::move(a));
  }
  return c;
}

void check_batch(const MlpSpec& spec, std::span<const std::vector<double>> inputs,
                 std::span<const std::vector<double>> targets) {
  if (inputs.empty()) throw ArgumentError("mlp batch is empty");
  if (inputs.size() != targets.size()) throw ArgumentError("mlp batch inputs and targets differ in count");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != spec.input_dim()) throw ConfigError("mlp batch input has the wrong dimension");
    if (targets[i].size() != spec.output_dim()) throw ConfigError("mlp batch target has the wrong dimension");
  }
}

}  // namespace

MlpOutput mlp_forward(const MlpSpec& spec, std::span<const double> input, const AblationMask& mask,
                      std::uint32_t model_index) {
  if (input.size() != spec.input_dim()) {
    throw ConfigError("mlp input has dimension " + std::to_string(input.size()) + ", expected " +
                      std::to_string(spec.input_dim()));
  }
  check_mask(spec, mask, model_index);

  MlpOutput out;
  out.activations.reserve(spec.num_nodes());
  std::vector<double> prev(input.begin(), input.end());
  for (std::size_t l = 0; l < spec.num_weight_layers(); ++l) {
    const auto& w = spec.weights[l];
    const auto act = layer_activation(spec, l);
    std::vector<double> next(w.rows);
    for (std::size_t r = 0; r < w.rows; ++r) {
      double acc = spec.biases[l][r];
      for (std::size_t k = 0; k < w.cols; ++k) acc += w(r, k) * prev[k];
      const NodeId id = NodeId::pool(model_index, static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(r));
      next[r] = mask.contains(id) ? 0.0 : activate(act, acc);
      out.activations.push_back({id, next[r]});
    }
    prev = std::move(next);
  }
  out.output = std::move(prev);
  return out;
}

double mlp_loss(const MlpSpec& spec, std::span<const std::vector<double>> inputs,
                std::span<const std::vector<double>> targets) {
  check_batch(spec, inputs, targets);
  double total = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto y = forward_cached(spec, inputs[i]).post.back();
    double sq = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) {
      const double d = y[j] - targets[i][j];
      sq += d * d;
    }
    total += 0.5 * sq;
  }
  return total / static_cast<double>(inputs.size());
}

MlpGradient mlp_gradient(const MlpSpec& spec, std::span<const std::vector<double>> inputs,
                         std::span<const std::vector<double>> targets) {
  check_batch(spec, inputs, targets);
  const std::size_t layers = spec.num_weight_layers();
  MlpGradient g;
  for (std::size_t l = 0; l < layers; ++l) {
    g.weights.emplace_back(spec.weights[l].rows, spec.weights[l].cols);
    g.biases.emplace_back(spec.biases[l].size(), 0.0);
  }
  const double scale = 1.0 / static_cast<double>(inputs.size());

  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto cache = forward_cached(spec, inputs[i]);
    // delta = dL/dz for the current layer; the output layer is linear.
    std::vector<double> delta(spec.output_dim());
    for (std::size_t j = 0; j < delta.size(); ++j) delta[j] = (cache.post.back()[j] - targets[i][j]) * scale;

    for (std::size_t l = layers; l-- > 0;) {
      const auto& a_prev = cache.post[l];
      auto& gw = g.weights[l];
      for (std::size_t r = 0; r < gw.rows; ++r) {
        g.biases[l][r] += delta[r];
        for (std::size_t k = 0; k < gw.cols; ++k) gw(r, k) += delta[r] * a_prev[k];
      }
      if (l == 0) break;
      const auto& w = spec.weights[l];
      const auto act = spec.hidden_activations[l - 1];
      std::vector<double> prev_delta(w.cols, 0.0);
      for (std::size_t k = 0; k < w.cols; ++k) {
        double acc = 0.0;
        for (std::size_t r = 0; r < w.rows; ++r) acc += w(r, k) * delta[r];
        prev_delta[k] = acc * activate_derivative(act, cache.pre[l - 1][k]);
      }
      delta = std::move(prev_delta);
    }
  }
  return g;
}

std::vector<double> one_hot(std::size_t label, std::size_t width) {
  std::vector<double> v(width, 0.0);
  v.at(label) = 1.0;
  return v;
}

MlpSpec mlp_init(const std::vector<std::size_t>& layer_sizes, Activation hidden, std::uint64_t seed) {
  MlpSpec spec;
  spec.layer_sizes = layer_sizes;
  if (layer_sizes.size() < 2) throw ConfigError("mlp needs at least an input and an output layer");
  spec.hidden_activations.assign(layer_sizes.size() - 2, hidden);
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    Matrix w(layer_sizes[l + 1], layer_sizes[l]);
    for (auto& x : w.data) x = rng.uniform(-0.5, 0.5);
    std::vector<double> b(layer_sizes[l + 1]);
    for (auto& x : b) x = rng.uniform(-0.5, 0.5);
    spec.weights.push_back(std::move(w));
    spec.biases.push_back(std::move(b));
  }
  spec.validate();
  return spec;
}

MlpSpec mlp_train(const std::vector<std::size_t>& layer_sizes, Activation hidden, const LabeledSamples& data,
                  const TrainParams& params, std::uint64_t seed) {
  MlpSpec spec = mlp_init(layer_sizes, hidden, seed);
  if (data.features.empty()) throw DataError("training set is empty");
  if (data.features.size() != data.labels.size()) throw DataError("feature and label counts differ");
  for (std::size_t i = 0; i < data.features.size(); ++i) {
    if (data.features[i].size() != spec.input_dim()) {
      throw DataError("sample " + std::to_string(i) + " has the wrong feature dimension");
    }
    if (data.labels[i] >= spec.output_dim()) {
      throw DataError("sample " + std::to_string(i) + " has label " + std::to_string(data.labels[i]) +
                      " outside [0, " + std::to_string(spec.output_dim()) + ")");
    }
  }
  if (params.epochs == 0) return spec;

  std::vector<std::vector<double>> targets;
  targets.reserve(data.labels.size());
  for (auto label : data.labels) targets.push_back(one_hot(label, spec.output_dim()));

  const std::size_t n = data.features.size();
  const std::size_t batch = params.batch_size == 0 ? n : std::min(params.batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(derive_seed(seed, 1));

  std::vector<std::vector<double>> xb;
  std::vector<std::vector<double>> tb;
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(start + batch, n);
      xb.clear();
      tb.clear();
      for (std::size_t i = start; i < end; ++i) {
        xb.push_back(data.features[order[i]]);
        tb.push_back(targets[order[i]]);
      }
      auto g = mlp_gradient(spec, xb, tb);
      for (std::size_t l = 0; l < spec.num_weight_layers(); ++l) {
        for (std::size_t e = 0; e < g.weights[l].data.size(); ++e) {
          spec.weights[l].data[e] -= params.learning_rate * g.weights[l].data[e];
        }
        for (std::size_t e = 0; e < g.biases[l].size(); ++e) spec.biases[l][e] -= params.learning_rate * g.biases[l][e];
      }
    }
  }
  return spec;
}

}  // namespace dstack
