#include "doctest.h"
#include "dstack/errors.hpp"
#include "dstack/pool.hpp"
#include "dstack/registry.hpp"
#include "fixtures.hpp"

using namespace dstack;
using namespace dstack::testing;

TEST_CASE("xor pool reads out label 1 for (1,0)") {
  std::vector<double> x{1, 0};
  auto r = pool_decide(xor_pool(), x);
  CHECK(r.decision.label == 1);
  CHECK(r.trace.decision == r.decision);
  CHECK(r.trace.records.size() == 3 + 1 + 2);
}

TEST_CASE("ablating an inactive xor node changes nothing") {
  std::vector<double> x{1, 0};
  const auto pool = xor_pool();
  CHECK(pool_decide(pool, x).decision == pool_decide(pool, x, AblationMask{kH2}).decision);
}

TEST_CASE("mixed pool trace covers every registered node") {
  PoolConfig pool;
  pool.models = {xor_net(), KMeansSpec{{{0, 0}, {1, 1}}}};
  pool.engine.weights = Matrix(2, 3, 0.5);
  pool.engine.biases = {0, 0.1};
  std::vector<double> x{1, 0};
  auto r = pool_decide(pool, x);
  CHECK(r.trace.records.size() == 3 + 2 + 3 + 2);
  const auto registry = register_nodes(pool);
  REQUIRE(registry.size() == r.trace.records.size());
  for (std::size_t i = 0; i < registry.size(); ++i) CHECK(registry.nodes()[i].id == r.trace.records[i].node);
}

TEST_CASE("fully masked k-means member contributes a zero block") {
  PoolConfig pool;
  pool.models = {xor_net(), KMeansSpec{{{0, 0}, {1, 1}}}};
  pool.engine.weights = Matrix::from_rows({{0, 1, 0}, {1, 0, 1}});
  pool.engine.biases = {0, 0};
  std::vector<double> x{1, 0};
  auto r = pool_forward(pool, x, AblationMask{NodeId::pool(1, 0, 0), NodeId::pool(1, 0, 1)});
  CHECK(r.records[3].value == 0.0);
  CHECK(r.records[4].value == 0.0);
  CHECK(r.records[6].value == 0.0);  // engine slot 1
  CHECK(r.records[7].value == 0.0);  // engine slot 2
}

TEST_CASE("pool mask and config errors") {
  std::vector<double> x{1, 0};
  const auto pool = xor_pool();
  CHECK_THROWS_AS(pool_decide(pool, x, AblationMask{NodeId::pool(3, 0, 0)}), MaskError);
  CHECK_THROWS_AS(pool_decide(pool, x, AblationMask{NodeId::engine_feature(4)}), MaskError);
  CHECK_THROWS_AS(pool_decide(pool, x, AblationMask{NodeId::engine_score(0)}), MaskError);
  std::vector<double> bad{1};
  CHECK_THROWS_AS(pool_decide(pool, bad), ConfigError);
  PoolConfig empty;
  CHECK_THROWS_AS(pool_decide(empty, x), ConfigError);
  auto wide = pool;
  wide.engine.weights = Matrix(2, 2);
  CHECK_THROWS_AS(pool_decide(wide, x), ConfigError);
}

TEST_CASE("determinism, empty-mask identity and inactive-node no-op on random pools") {
  Rng rng(101);
  for (int trial = 0; trial < 60; ++trial) {
    const auto pool = random_pool(rng);
    const auto x = random_vector(rng, 2, 2.0);
    const auto a = pool_decide(pool, x);
    const auto b = pool_decide(pool, x, AblationMask{});
    CHECK(bitwise_equal(a.trace, b.trace));
    const auto reference = pool_forward(pool, x).decision;
    CHECK(a.decision == reference);

    for (const auto& r : a.trace.records) {
      if (r.node.component == Component::DecisionEngine && r.node.layer == kEngineScoreLayer) continue;
      const bool is_centroid = r.node.component == Component::PoolModel &&
                               std::holds_alternative<KMeansSpec>(pool.models[r.node.model_index]);
      if (r.value != 0.0) continue;
      const auto ablated = pool_forward(pool, x, AblationMask{r.node});
      CHECK(ablated.decision == reference);
      if (is_centroid) CHECK(ablated.records == pool_forward(pool, x).records);
    }
  }
}

TEST_CASE("adding a constant to every engine bias keeps the label") {
  Rng rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    auto pool = random_pool(rng, 2, 3);
    const auto x = random_vector(rng, 2);
    const auto label = pool_forward(pool, x).decision.label;
    const double c = rng.uniform(-50, 50);
    for (auto& b : pool.engine.biases) b += c;
    CHECK(pool_forward(pool, x).decision.label == label);
  }
}

TEST_CASE("config digest reacts to every field") {
  const auto base = config_digest(xor_pool());
  CHECK(base == config_digest(xor_pool()));
  CHECK(base != config_digest(xor_pool(1)));
  auto tweaked = xor_pool();
  std::get<MlpSpec>(tweaked.models[0]).biases[1][0] = -0.999;
  CHECK(base != config_digest(tweaked));
}
