#pragma once

// Shared hand-built and randomized pools for the unit and acceptance suites.

#include <cmath>
#include <vector>

#include "dstack/pool.hpp"
#include "dstack/rng.hpp"

namespace dstack::testing {

// Hidden weights [[1,1],[1,1]], biases [0,-1], RELU; output weights [1,-2],
// bias 0. Output is 1 for (1,0) and (0,1), 0 for (0,0) and (1,1).
inline MlpSpec xor_net() {
  MlpSpec s;
  s.layer_sizes = {2, 2, 1};
  s.hidden_activations = {Activation::Relu};
  s.weights = {Matrix::from_rows({{1, 1}, {1, 1}}), Matrix::from_rows({{1, -2}})};
  s.biases = {{0, -1}, {0}};
  return s;
}

// Engine whose logits are (0, y) for the single pooled feature y, so y = 1
// reads out as label 1 and y = 0 ties to label 0.
inline EngineSpec xor_engine() {
  EngineSpec e;
  e.weights = Matrix::from_rows({{0}, {1}});
  e.biases = {0, 0};
  return e;
}

inline PoolConfig xor_pool(std::uint64_t seed = 0) {
  PoolConfig p;
  p.models = {xor_net()};
  p.engine = xor_engine();
  p.seed = seed;
  return p;
}

inline const NodeId kH1 = NodeId::pool(0, 0, 0);
inline const NodeId kH2 = NodeId::pool(0, 0, 1);
inline const NodeId kXorOut = NodeId::pool(0, 1, 0);

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (auto& x : m.data) x = rng.uniform(-scale, scale);
  return m;
}

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-scale, scale);
  return v;
}

inline MlpSpec random_mlp(Rng& rng, std::vector<std::size_t> sizes, Activation act = Activation::Relu) {
  MlpSpec s;
  s.layer_sizes = sizes;
  s.hidden_activations.assign(sizes.size() - 2, act);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    s.weights.push_back(random_matrix(rng, sizes[l + 1], sizes[l]));
    s.biases.push_back(random_vector(rng, sizes[l + 1], 0.5));
  }
  return s;
}

inline KMeansSpec random_kmeans(Rng& rng, std::size_t k, std::size_t dim) {
  KMeansSpec s;
  for (std::size_t j = 0; j < k; ++j) s.centroids.push_back(random_vector(rng, dim, 2.0));
  return s;
}

// Small heterogeneous pool: one MLP (1-2 hidden layers, widths 1-3), and with
// probability 1/2 a k-means member with k in {2, 3}; random linear engine.
// At most 12 ablatable nodes with the default widths.
inline PoolConfig random_pool(Rng& rng, std::size_t input_dim = 2, std::size_t classes = 2) {
  PoolConfig p;
  std::vector<std::size_t> sizes{input_dim};
  const auto hidden_layers = 1 + rng.below(2);
  for (std::size_t i = 0; i < hidden_layers; ++i) sizes.push_back(1 + rng.below(3));
  sizes.push_back(classes);
  p.models.emplace_back(random_mlp(rng, sizes));
  if (rng.below(2) == 1) p.models.emplace_back(random_kmeans(rng, 2 + rng.below(2), input_dim));
  p.engine.weights = random_matrix(rng, classes, p.pooled_feature_dim(), 2.0);
  p.engine.biases = random_vector(rng, classes, 0.5);
  p.seed = rng.next_u64();
  return p;
}

inline std::size_t ablatable_count(const PoolConfig& p) {
  std::size_t n = p.engine.feature_dim();
  for (const auto& m : p.models) {
    n += std::holds_alternative<MlpSpec>(m) ? std::get<MlpSpec>(m).num_nodes() : std::get<KMeansSpec>(m).k();
  }
  return n;
}

}  // namespace dstack::testing
