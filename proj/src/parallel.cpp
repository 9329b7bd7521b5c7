#include "dstack/parallel.hpp"

#include <cstddef>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dstack {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

namespace {

std::size_t nearest(std::span<const double> p, const std::vector<std::vector<double>>& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < centroids.size(); ++j) {
    const double d = squared_distance(p, centroids[j]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

}  // namespace

std::vector<std::size_t> nearest_centroids_serial(std::span<const std::vector<double>> points,
                                                  const std::vector<std::vector<double>>& centroids) {
  std::vector<std::size_t> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = nearest(points[i], centroids);
  return out;
}

std::vector<std::size_t> nearest_centroids_parallel(std::span<const std::vector<double>> points,
                                                    const std::vector<std::vector<double>>& centroids) {
  std::vector<std::size_t> out(points.size());
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = nearest(points[i], centroids);
  return out;
}

int parallel_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace dstack
