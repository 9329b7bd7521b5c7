#include "dstack/kmeans.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>
#include <string>

#include "dstack/errors.hpp"
#include "dstack/rng.hpp"

namespace dstack {

void KMeansSpec::validate() const {
  if (centroids.empty()) throw ConfigError("k-means needs at least one centroid");
  const auto d = centroids.front().size();
  if (d == 0) throw ConfigError("k-means centroids must have positive dimension");
  for (const auto& c : centroids) {
    if (c.size() != d) throw ConfigError("k-means centroids differ in dimension");
  }
}

namespace {

void check_points(std::span<const std::vector<double>> points) {
  if (points.empty()) throw ArgumentError("k-means needs at least one point");
  const auto d = points.front().size();
  for (const auto& p : points) {
    if (p.size() != d) throw ArgumentError("k-means points differ in dimension");
  }
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](double x, double y) {
    return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
  });
}

}  // namespace

double within_cluster_ss(std::span<const std::vector<double>> points, const std::vector<std::vector<double>>& centroids,
                         std::span<const std::size_t> assignments) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) total += squared_distance(points[i], centroids[assignments[i]]);
  return total;
}

std::vector<std::vector<double>> kmeans_initial_centroids(std::span<const std::vector<double>> points, std::size_t k,
                                                          std::uint64_t seed) {
  if (k == 0) throw ArgumentError("k-means needs k >= 1");
  check_points(points);
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<std::vector<double>> chosen;
  for (auto idx : order) {
    if (chosen.size() == k) break;
    const auto& p = points[idx];
    if (std::none_of(chosen.begin(), chosen.end(), [&](const auto& c) { return bitwise_equal(c, p); })) {
      chosen.push_back(p);
    }
  }
  const std::size_t distinct = chosen.size();
  for (std::size_t i = 0; chosen.size() < k; ++i) chosen.push_back(chosen[i % distinct]);
  return chosen;
}

KMeansFit kmeans_refine(std::span<const std::vector<double>> points, std::vector<std::vector<double>> initial,
                        std::size_t max_iters, Exec exec) {
  check_points(points);
  KMeansSpec{initial}.validate();
  if (initial.front().size() != points.front().size()) {
    throw ArgumentError("k-means centroids and points differ in dimension");
  }

  KMeansFit fit;
  fit.spec.centroids = std::move(initial);
  auto& centroids = fit.spec.centroids;
  const std::size_t k = centroids.size();
  const std::size_t d = centroids.front().size();

  auto assign = [&] {
    return exec == Exec::Parallel ? nearest_centroids_parallel(points, centroids)
                                  : nearest_centroids_serial(points, centroids);
  };

  std::vector<std::size_t> previous;
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    auto assignment = assign();
    if (iter > 0 && assignment == previous) {
      fit.assignments = std::move(assignment);
      return fit;
    }
    std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto c = assignment[i];
      ++counts[c];
      for (std::size_t j = 0; j < d; ++j) sums[c][j] += points[i][j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < d; ++j) centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
    }
    fit.wcss_history.push_back(within_cluster_ss(points, centroids, assignment));
    fit.iterations = iter + 1;
    previous = std::move(assignment);
  }
  fit.assignments = assign();
  return fit;
}

KMeansFit kmeans_fit_detailed(std::span<const std::vector<double>> points, std::size_t k, std::uint64_t seed,
                              std::size_t max_iters, Exec exec) {
  return kmeans_refine(points, kmeans_initial_centroids(points, k, seed), max_iters, exec);
}

KMeansSpec kmeans_fit(std::span<const std::vector<double>> points, std::size_t k, std::uint64_t seed,
                      std::size_t max_iters) {
  return kmeans_fit_detailed(points, k, seed, max_iters).spec;
}

KMeansOutput kmeans_assign(const KMeansSpec& spec, std::span<const double> input, const AblationMask& mask,
                           std::uint32_t model_index) {
  if (input.size() != spec.dim()) {
    throw ConfigError("k-means input has dimension " + std::to_string(input.size()) + ", expected " +
                      std::to_string(spec.dim()));
  }
  for (const auto& n : mask) {
    if (n.component != Component::PoolModel || n.model_index != model_index || n.layer != 0 || n.unit >= spec.k()) {
      throw MaskError("mask node " + to_string(n) + " does not belong to k-means model " +
                      std::to_string(model_index));
    }
  }
  if (mask.size() >= spec.k()) throw TotalAblationError("mask covers every centroid of k-means model " +
                                                        std::to_string(model_index));

  KMeansOutput out;
  double best_d = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t j = 0; j < spec.k(); ++j) {
    if (mask.contains(NodeId::pool(model_index, 0, static_cast<std::uint32_t>(j)))) continue;
    const double dist = squared_distance(input, spec.centroids[j]);
    if (!found || dist < best_d) {
      best_d = dist;
      out.winner = j;
      found = true;
    }
  }
  out.one_hot.assign(spec.k(), 0.0);
  out.one_hot[out.winner] = 1.0;
  out.activations.reserve(spec.k());
  for (std::size_t j = 0; j < spec.k(); ++j) {
    out.activations.push_back({NodeId::pool(model_index, 0, static_cast<std::uint32_t>(j)), out.one_hot[j]});
  }
  return out;
}

}  // namespace dstack
