#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dstack/node.hpp"
#include "dstack/parallel.hpp"

namespace dstack {

// Each centroid is one instrumented node: NodeId::pool(model, 0, j).
struct KMeansSpec {
  std::vector<std::vector<double>> centroids;

  std::size_t k() const { return centroids.size(); }
  std::size_t dim() const { return centroids.empty() ? 0 : centroids.front().size(); }
  void validate() const;

  friend bool operator==(const KMeansSpec&, const KMeansSpec&) = default;
};

struct KMeansFit {
  KMeansSpec spec;
  std::size_t iterations = 0;
  std::vector<std::size_t> assignments;
  // Within-cluster sum of squares after every centroid update.
  std::vector<double> wcss_history;
};

// Lloyd's algorithm from the given starting centroids. Ties go to the lower
// centroid index; an empty cluster keeps its previous centroid. Stops after
// max_iters updates or once the assignment is unchanged.
KMeansFit kmeans_refine(std::span<const std::vector<double>> points, std::vector<std::vector<double>> initial,
                        std::size_t max_iters, Exec exec = Exec::Serial);

// Seeds with k distinct points drawn by a seeded shuffle (repeating the
// distinct points cyclically when fewer than k exist), then refines.
KMeansFit kmeans_fit_detailed(std::span<const std::vector<double>> points, std::size_t k, std::uint64_t seed,
                              std::size_t max_iters, Exec exec = Exec::Serial);

KMeansSpec kmeans_fit(std::span<const std::vector<double>> points, std::size_t k, std::uint64_t seed,
                      std::size_t max_iters);

std::vector<std::vector<double>> kmeans_initial_centroids(std::span<const std::vector<double>> points, std::size_t k,
                                                          std::uint64_t seed);

double within_cluster_ss(std::span<const std::vector<double>> points, const std::vector<std::vector<double>>& centroids,
                         std::span<const std::size_t> assignments);

struct KMeansOutput {
  std::vector<double> one_hot;
  Activations activations;
  std::size_t winner = 0;
};

// Nearest non-masked centroid by squared Euclidean distance. Throws
// TotalAblationError if the mask covers every centroid.
KMeansOutput kmeans_assign(const KMeansSpec& spec, std::span<const double> input, const AblationMask& mask = {},
                           std::uint32_t model_index = 0);

}  // namespace dstack
