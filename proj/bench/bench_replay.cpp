// Serial reference vs OpenMP kernels on the replay-heavy paths.

#include <benchmark/benchmark.h>

#include "dstack/explainer.hpp"
#include "dstack/kmeans.hpp"
#include "dstack/replay.hpp"
#include "dstack/rng.hpp"

using namespace dstack;

namespace {

PoolConfig wide_pool(std::size_t input_dim, std::size_t hidden, std::size_t classes, std::uint64_t seed) {
  Rng rng(seed);
  auto random_matrix = [&](std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (auto& x : m.data) x = rng.uniform(-1, 1);
    return m;
  };
  MlpSpec mlp;
  mlp.layer_sizes = {input_dim, hidden, hidden, classes};
  mlp.hidden_activations = {Activation::Relu, Activation::Relu};
  for (std::size_t l = 0; l + 1 < mlp.layer_sizes.size(); ++l) {
    mlp.weights.push_back(random_matrix(mlp.layer_sizes[l + 1], mlp.layer_sizes[l]));
    mlp.biases.emplace_back(mlp.layer_sizes[l + 1], 0.1);
  }
  KMeansSpec km;
  for (int j = 0; j < 8; ++j) {
    std::vector<double> c(input_dim);
    for (auto& x : c) x = rng.uniform(-2, 2);
    km.centroids.push_back(c);
  }
  PoolConfig p;
  p.models = {mlp, km};
  p.engine.weights = random_matrix(classes, p.pooled_feature_dim());
  p.engine.biases.assign(classes, 0.0);
  return p;
}

std::vector<AblationMask> random_masks(const PoolConfig& pool, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  const auto nodes = register_nodes(pool).ablatable_nodes();
  std::vector<AblationMask> masks;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<NodeId> pick;
    for (const auto& n : nodes) {
      if (rng.below(10) == 0) pick.push_back(n);
    }
    masks.emplace_back(pick);
  }
  return masks;
}

void BM_Replay(benchmark::State& state, Exec exec) {
  const auto pool = wide_pool(16, static_cast<std::size_t>(state.range(0)), 4, 1);
  const std::vector<double> x(16, 0.25);
  const auto masks = random_masks(pool, 512, 2);
  for (auto _ : state) benchmark::DoNotOptimize(replay(exec, pool, x, masks));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(masks.size()));
}

void BM_Exhaustive(benchmark::State& state, Exec exec) {
  // Candidates chosen so that nothing flips: the search visits every subset.
  const auto pool = wide_pool(4, 8, 2, 3);
  const std::vector<double> x(4, 0.5);
  AblationMask none_flip;
  const auto original = pool_forward(pool, x).decision.label;
  for (const auto& n : register_nodes(pool).ablatable_nodes()) {
    auto trial = none_flip;
    trial.insert(n);
    if (pool_forward(pool, x, trial).decision.label == original && none_flip.size() < 12) none_flip = trial;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(minimal_flip_subset_exhaustive(pool, x, none_flip, 4, exec));
  }
}

void BM_KMeansAssign(benchmark::State& state, Exec exec) {
  Rng rng(4);
  std::vector<std::vector<double>> points(static_cast<std::size_t>(state.range(0)), std::vector<double>(8));
  for (auto& p : points)
    for (auto& v : p) v = rng.normal();
  std::vector<std::vector<double>> centroids(16, std::vector<double>(8));
  for (auto& c : centroids)
    for (auto& v : c) v = rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(exec == Exec::Parallel ? nearest_centroids_parallel(points, centroids)
                                                    : nearest_centroids_serial(points, centroids));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(BM_Replay, serial, Exec::Serial)->Arg(16)->Arg(64);
BENCHMARK_CAPTURE(BM_Replay, parallel, Exec::Parallel)->Arg(16)->Arg(64);
BENCHMARK_CAPTURE(BM_Exhaustive, serial, Exec::Serial);
BENCHMARK_CAPTURE(BM_Exhaustive, parallel, Exec::Parallel);
BENCHMARK_CAPTURE(BM_KMeansAssign, serial, Exec::Serial)->Arg(10000);
BENCHMARK_CAPTURE(BM_KMeansAssign, parallel, Exec::Parallel)->Arg(10000);

BENCHMARK_MAIN();
