#pragma once

#include <span>
#include <vector>

namespace dstack {

// Selects between the OpenMP kernel and its serial reference. Both produce
// identical results; the serial path is kept for testing and benchmarking.
enum class Exec { Serial, Parallel };

double squared_distance(std::span<const double> a, std::span<const double> b);

// Index of the nearest centroid for every point, lowest index on ties.
std::vector<std::size_t> nearest_centroids_serial(std::span<const std::vector<double>> points,
                                                  const std::vector<std::vector<double>>& centroids);
std::vector<std::size_t> nearest_centroids_parallel(std::span<const std::vector<double>> points,
                                                    const std::vector<std::vector<double>>& centroids);

// Number of threads the parallel kernels will use (1 without OpenMP).
int parallel_threads();

}  // namespace dstack
