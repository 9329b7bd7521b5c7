#include <algorithm>

#include "doctest.h"
#include "dstack/errors.hpp"
#include "dstack/kmeans.hpp"
#include "dstack/rng.hpp"

using namespace dstack;

namespace {
std::vector<std::vector<double>> pts1d(std::initializer_list<double> xs) {
  std::vector<std::vector<double>> out;
  for (double x : xs) out.push_back({x});
  return out;
}
}  // namespace

TEST_CASE("two symmetric clusters converge to their means") {
  const auto pts = pts1d({0, 1, 10, 11});
  auto fit = kmeans_refine(pts, {{0}, {10}}, 100);
  CHECK(fit.spec.centroids == std::vector<std::vector<double>>{{0.5}, {10.5}});
  CHECK(fit.assignments == std::vector<std::size_t>{0, 0, 1, 1});
}

TEST_CASE("single cluster is the mean") {
  const auto pts = pts1d({5, 5, 5});
  CHECK(kmeans_fit(pts, 1, 3, 10).centroids == std::vector<std::vector<double>>{{5}});
}

TEST_CASE("duplicate starting centroids: lower index wins every point") {
  const auto pts = pts1d({5, 5, 5});
  auto fit = kmeans_refine(pts, {{5}, {5}}, 10);
  CHECK(fit.spec.centroids == std::vector<std::vector<double>>{{5}, {5}});
  CHECK(fit.assignments == std::vector<std::size_t>{0, 0, 0});

  // Seeded init with fewer distinct points than k repeats them.
  CHECK(kmeans_initial_centroids(pts, 2, 1) == std::vector<std::vector<double>>{{5}, {5}});
}

TEST_CASE("seeded initialization picks distinct points deterministically") {
  const auto pts = pts1d({1, 1, 2, 3, 3, 4});
  const auto a = kmeans_initial_centroids(pts, 3, 42);
  CHECK(a == kmeans_initial_centroids(pts, 3, 42));
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
}

TEST_CASE("empty cluster keeps its centroid") {
  const auto pts = pts1d({0, 1});
  auto fit = kmeans_refine(pts, {{0.5}, {100}}, 10);
  CHECK(fit.spec.centroids[1] == std::vector<double>{100});
}

TEST_CASE("kmeans_fit argument errors") {
  const auto pts = pts1d({1, 2});
  CHECK_THROWS_AS(kmeans_fit(pts, 0, 1, 10), ArgumentError);
  std::vector<std::vector<double>> none;
  CHECK_THROWS_AS(kmeans_fit(none, 2, 1, 10), ArgumentError);
}

TEST_CASE("within-cluster sum of squares never increases") {
  Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::vector<double>> pts;
    const auto n = 20 + rng.below(60);
    for (std::size_t i = 0; i < n; ++i) pts.push_back({rng.normal() * 3, rng.normal(), rng.uniform(-4, 4)});
    auto fit = kmeans_fit_detailed(pts, 2 + rng.below(5), rng.next_u64(), 100);
    for (std::size_t i = 1; i < fit.wcss_history.size(); ++i) {
      CHECK(fit.wcss_history[i] <= fit.wcss_history[i - 1]);
    }
  }
}

TEST_CASE("parallel assignment kernel matches the serial reference") {
  Rng rng(3);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 500; ++i) pts.push_back({rng.normal(), rng.normal()});
  std::vector<std::vector<double>> cs{{0, 0}, {1, 1}, {-1, 1}, {0, 0}};
  CHECK(nearest_centroids_serial(pts, cs) == nearest_centroids_parallel(pts, cs));
  auto a = kmeans_fit_detailed(pts, 4, 9, 50, Exec::Serial);
  auto b = kmeans_fit_detailed(pts, 4, 9, 50, Exec::Parallel);
  CHECK(a.spec == b.spec);
  CHECK(a.wcss_history == b.wcss_history);
}

TEST_CASE("kmeans_assign nearest, masked, and tied") {
  KMeansSpec spec{{{0.5}, {10.5}}};
  std::vector<double> two{2}, mid{5.5};
  CHECK(kmeans_assign(spec, two).one_hot == std::vector<double>{1, 0});
  auto masked = kmeans_assign(spec, two, AblationMask{NodeId::pool(0, 0, 0)});
  CHECK(masked.one_hot == std::vector<double>{0, 1});
  CHECK(masked.activations[0].value == 0.0);
  CHECK(kmeans_assign(spec, mid).winner == 0);
}

TEST_CASE("masking every centroid is a total ablation") {
  KMeansSpec spec{{{0.5}, {10.5}}};
  std::vector<double> x{2};
  CHECK_THROWS_AS(kmeans_assign(spec, x, AblationMask{NodeId::pool(0, 0, 0), NodeId::pool(0, 0, 1)}),
                  TotalAblationError);
  CHECK_THROWS_AS(kmeans_assign(spec, x, AblationMask{NodeId::pool(0, 0, 5)}), MaskError);
}
