#include <algorithm>

#include "doctest.h"
#include "dstack/errors.hpp"
#include "dstack/explainer.hpp"
#include "dstack/replay.hpp"
#include "fixtures.hpp"

using namespace dstack;
using namespace dstack::testing;

namespace {

// One 3-node population (a single-layer linear net with three outputs) whose
// activations are exactly {0.9, 0.1, 0.0}, plus a 3-class engine.
PoolConfig three_unit_pool() {
  MlpSpec m;
  m.layer_sizes = {1, 3};
  m.weights = {Matrix::from_rows({{0}, {0}, {0}})};
  m.biases = {{0.9, 0.1, 0.0}};
  PoolConfig p;
  p.models = {m};
  p.engine.weights = Matrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  p.engine.biases = {0, 0, 0};
  return p;
}

ActivationTrace three_unit_trace() {
  std::vector<double> x{0};
  return pool_decide(three_unit_pool(), x).trace;
}

// Strategy applied to the pool population only.
AblationMask pool_part(const Engram& e) {
  std::vector<NodeId> out;
  for (const auto& n : e.nodes) {
    if (n.component == Component::PoolModel) out.push_back(n);
  }
  return AblationMask(out);
}

}  // namespace

TEST_CASE("top_k picks the largest magnitude") {
  const auto reg = register_nodes(three_unit_pool());
  const auto e = extract_engram(three_unit_trace(), EngramStrategy::top_k(1.0 / 3.0), reg);
  CHECK(pool_part(e) == AblationMask{NodeId::pool(0, 0, 0)});
  CHECK(e.strategy == EngramStrategy::top_k(1.0 / 3.0));
}

TEST_CASE("abs threshold filter is strict") {
  const auto reg = register_nodes(three_unit_pool());
  const auto e = extract_engram(three_unit_trace(), EngramStrategy::abs_threshold(0.05), reg);
  CHECK(pool_part(e) == AblationMask{NodeId::pool(0, 0, 0), NodeId::pool(0, 0, 1)});

  MlpSpec zero;
  zero.layer_sizes = {1, 3};
  zero.weights = {Matrix(3, 1)};
  zero.biases = {{0, 0, 0}};
  auto pool = three_unit_pool();
  pool.models = {zero};
  std::vector<double> x{0};
  const auto all_zero = extract_engram(pool_decide(pool, x).trace, EngramStrategy::abs_threshold(0.0),
                                       register_nodes(pool));
  CHECK(all_zero.nodes.empty());
}

TEST_CASE("strategy validation and parsing") {
  CHECK_THROWS_AS(EngramStrategy::top_k(0.0), ArgumentError);
  CHECK_THROWS_AS(EngramStrategy::top_k(1.5), ArgumentError);
  CHECK_THROWS_AS(EngramStrategy::abs_threshold(-0.1), ArgumentError);
  CHECK(EngramStrategy::parse("top_k:0.5") == EngramStrategy::top_k(0.5));
  CHECK(EngramStrategy::parse("abs:0.25") == EngramStrategy::abs_threshold(0.25));
  CHECK_THROWS_AS(EngramStrategy::parse("median:1"), ArgumentError);
  CHECK_THROWS_AS(EngramStrategy::parse("top_k:x"), ArgumentError);
  const auto reg = register_nodes(three_unit_pool());
  CHECK_THROWS_AS(extract_engram(three_unit_trace(), EngramStrategy{EngramStrategy::Kind::TopKFraction, 2.0}, reg),
                  ArgumentError);
}

TEST_CASE("engrams come from unablated traces only") {
  std::vector<double> x{1, 0};
  const auto pool = xor_pool();
  const auto masked = pool_decide(pool, x, AblationMask{kH2}).trace;
  CHECK_THROWS_AS(extract_engram(masked, EngramStrategy::top_k(0.1), register_nodes(pool)), PreconditionError);
}

TEST_CASE("top_k count snaps products that are integers up to rounding") {
  // 30 engine slots; 0.1 * 30 evaluates to 3.0000000000000004.
  MlpSpec m;
  m.layer_sizes = {1, 30};
  m.weights = {Matrix(30, 1)};
  m.biases = {std::vector<double>(30, 1.0)};
  PoolConfig p;
  p.models = {m};
  p.engine.weights = Matrix(2, 30);
  p.engine.biases = {0, 0};
  std::vector<double> x{0};
  const auto e = extract_engram(pool_decide(p, x).trace, EngramStrategy::top_k(0.1), register_nodes(p));
  CHECK(e.nodes.size() == 6);  // 3 pool units + 3 engine slots
}

TEST_CASE("empty engram is non-causal with no controls") {
  std::vector<double> x{1, 0};
  const auto r = causal_test(xor_pool(), x, Engram{}, 10, 1);
  CHECK(r.ablated == r.original);
  CHECK(r.verdict == Verdict::NonCausal);
  CHECK(r.controls.empty());
  CHECK_FALSE(r.minimal_subset.has_value());
}

TEST_CASE("xor engram {h1} is causal, {h2} is not") {
  std::vector<double> x{1, 0};
  const auto pool = xor_pool();
  const auto r = causal_test(pool, x, explicit_engram(pool, x, AblationMask{kH1}), 20, 3);
  CHECK(r.original.label == 1);
  CHECK(r.ablated.label == 0);
  CHECK(r.verdict == Verdict::Causal);
  CHECK(r.minimal_subset == AblationMask{kH1});
  // Controls are single nodes from {h2, out, slot}; h2 is inactive and never flips.
  for (const auto& c : r.controls) {
    CHECK(c.mask.size() == 1);
    CHECK_FALSE(c.mask.contains(kH1));
    if (c.mask.contains(kH2)) CHECK_FALSE(c.flipped);
  }
  const auto h2 = causal_test(pool, x, explicit_engram(pool, x, AblationMask{kH2}), 20, 3);
  CHECK(h2.verdict == Verdict::NonCausal);
  CHECK_FALSE(h2.minimal_subset.has_value());
}

TEST_CASE("engram with a score node is a mask error") {
  std::vector<double> x{1, 0};
  Engram e;
  e.nodes = AblationMask{NodeId::engine_score(0)};
  CHECK_THROWS_AS(causal_test(xor_pool(), x, e, 5, 1), MaskError);
}

TEST_CASE("controls are skipped when the complement is too small") {
  std::vector<double> x{1, 0};
  const auto pool = xor_pool();
  Engram e;
  e.nodes = AblationMask{kH1, kH2, kXorOut};
  const auto r = causal_test(pool, x, e, 5, 1);
  CHECK(r.controls_skipped);
  CHECK(r.controls.empty());
}

TEST_CASE("control masks are well formed and the rate matches") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pool = random_pool(rng);
    const auto x = random_vector(rng, 2, 2.0);
    const auto r = explain(pool, x, EngramStrategy::top_k(0.3), 15, rng.next_u64());
    const auto reg = register_nodes(pool);
    std::size_t flipped = 0;
    for (const auto& c : r.controls) {
      CHECK(c.mask.size() == r.engram.nodes.size());
      for (const auto& n : c.mask) {
        CHECK(reg.is_ablatable(n));
        CHECK_FALSE(r.engram.nodes.contains(n));
      }
      CHECK(c.flipped == (pool_forward(pool, x, c.mask).decision.label != r.original.label));
      flipped += c.flipped;
    }
    if (!r.controls.empty()) {
      CHECK(r.control_flip_rate == static_cast<double>(flipped) / static_cast<double>(r.controls.size()));
    }
    CHECK(r.specificity == 1.0 - r.control_flip_rate);
    // Verdict soundness by independent replay.
    const bool flips = pool_forward(pool, x, r.engram.nodes).decision.label != pool_forward(pool, x).decision.label;
    CHECK((r.verdict == Verdict::Causal) == flips);
  }
}

TEST_CASE("reports reproduce bit for bit and survive json") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pool = random_pool(rng);
    const auto x = random_vector(rng, 2, 2.0);
    const auto seed = rng.next_u64();
    const auto a = explain(pool, x, EngramStrategy::top_k(0.5), 12, seed, Exec::Parallel);
    const auto b = causal_test(pool, a.input, a.engram, a.num_controls, a.seed, Exec::Serial);
    CHECK(report_to_json(a).dump() == report_to_json(b).dump());
    CHECK(report_to_json(report_from_json(report_to_json(a))).dump() == report_to_json(a).dump());
  }
}

TEST_CASE("exhaustive search on xor (1,1)") {
  std::vector<double> x{1, 1};
  const auto pool = xor_pool();
  CHECK(pool_forward(pool, x).decision.label == 0);
  const auto found = minimal_flip_subset_exhaustive(pool, x, AblationMask{kH1, kH2}, 2);
  REQUIRE(found.has_value());
  CHECK(*found == AblationMask{kH2});
  CHECK_FALSE(minimal_flip_subset_exhaustive(pool, x, AblationMask{}, 3).has_value());
  CHECK_FALSE(minimal_flip_subset_exhaustive(pool, x, AblationMask{kH1}, 1).has_value());
}

TEST_CASE("exhaustive search enforces its budget") {
  MlpSpec m;
  m.layer_sizes = {1, 21};
  m.weights = {Matrix(21, 1)};
  m.biases = {std::vector<double>(21, 0.0)};
  PoolConfig p;
  p.models = {m};
  p.engine.weights = Matrix(2, 21);
  p.engine.biases = {0, 0};
  std::vector<NodeId> nodes;
  for (std::uint32_t u = 0; u < 21; ++u) nodes.push_back(NodeId::pool(0, 0, u));
  std::vector<double> x{0};
  CHECK_THROWS_AS(minimal_flip_subset_exhaustive(p, x, AblationMask(nodes), 2), BudgetError);
}

TEST_CASE("exhaustive result flips under replay; serial and parallel agree") {
  Rng rng(2);
  int found_any = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto pool = random_pool(rng);
    const auto x = random_vector(rng, 2, 2.0);
    const AblationMask all(register_nodes(pool).ablatable_nodes());
    const auto serial = minimal_flip_subset_exhaustive(pool, x, all, all.size(), Exec::Serial);
    const auto parallel = minimal_flip_subset_exhaustive(pool, x, all, all.size(), Exec::Parallel);
    CHECK(serial == parallel);
    if (serial) {
      ++found_any;
      CHECK(pool_forward(pool, x, *serial).decision.label != pool_forward(pool, x).decision.label);
    }
  }
  CHECK(found_any > 0);
}

TEST_CASE("greedy shrink examples") {
  std::vector<double> x{1, 0};
  const auto pool = xor_pool();
  const auto shrunk = greedy_shrink(pool, x, AblationMask{kH1, kH2});
  CHECK(shrunk.flips);
  CHECK(shrunk.nodes == AblationMask{kH1});

  const auto stays = greedy_shrink(pool, x, AblationMask{kH2});
  CHECK_FALSE(stays.flips);
  CHECK(stays.nodes == AblationMask{kH2});
}

TEST_CASE("h1 belongs to the engrams of both (1,0) and (0,1)") {
  const auto pool = xor_pool();
  const auto reg = register_nodes(pool);
  std::vector<double> a{1, 0}, b{0, 1};
  const auto ea = extract_engram(pool_decide(pool, a).trace, EngramStrategy::top_k(kDefaultTopKFraction), reg);
  const auto eb = extract_engram(pool_decide(pool, b).trace, EngramStrategy::top_k(kDefaultTopKFraction), reg);
  CHECK(ea.nodes.contains(kH1));
  CHECK(eb.nodes.contains(kH1));
}

TEST_CASE("replay kernels agree") {
  Rng rng(21);
  const auto pool = random_pool(rng);
  const auto x = random_vector(rng, 2);
  const auto nodes = register_nodes(pool).ablatable_nodes();
  std::vector<AblationMask> masks;
  for (int i = 0; i < 300; ++i) {
    std::vector<NodeId> pick;
    for (const auto& n : nodes) {
      if (rng.below(3) == 0) pick.push_back(n);
    }
    masks.emplace_back(pick);
  }
  CHECK(replay_serial(pool, x, masks) == replay_parallel(pool, x, masks));
  masks.push_back(AblationMask{NodeId::pool(9, 0, 0)});
  CHECK_THROWS_AS(replay_parallel(pool, x, masks), MaskError);
}
