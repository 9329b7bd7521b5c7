#include <bit>
#include <filesystem>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "dstack/errors.hpp"
#include "dstack/hash.hpp"
#include "dstack/pool.hpp"
#include "dstack/registry.hpp"
#include "fixtures.hpp"

using namespace dstack;
using namespace dstack::testing;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "dstack_tests";
  std::filesystem::create_directories(dir);
  auto p = dir / name;
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST_CASE("registry of a 2-2-1 mlp with a 2-class engine") {
  const auto reg = register_nodes(xor_pool());
  CHECK(reg.size() == 6);
  CHECK(reg.ablatable_count() == 4);
  CHECK_FALSE(reg.is_ablatable(NodeId::engine_score(0)));
  CHECK(reg.contains(NodeId::engine_score(1)));
  CHECK(reg.find(NodeId::engine_score(0))->family == NodeFamily::EngineScore);
}

TEST_CASE("registry of a k=3 k-means pool") {
  PoolConfig pool;
  pool.models = {KMeansSpec{{{0}, {1}, {2}}}};
  pool.engine.weights = Matrix(2, 3);
  pool.engine.biases = {0, 0};
  const auto reg = register_nodes(pool);
  CHECK(reg.size() == 8);
  CHECK(reg.ablatable_count() == 6);
}

TEST_CASE("registry of an empty pool is a configuration error") {
  PoolConfig pool;
  pool.engine.weights = Matrix(2, 0);
  pool.engine.biases = {0, 0};
  CHECK_THROWS_AS(register_nodes(pool), ConfigError);
}

TEST_CASE("registry is sorted canonically") {
  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    const auto reg = register_nodes(random_pool(rng));
    for (std::size_t j = 1; j < reg.size(); ++j) CHECK(reg.nodes()[j - 1].id < reg.nodes()[j].id);
  }
}

TEST_CASE("node id text form round-trips") {
  for (auto id : {kH1, kXorOut, NodeId::engine_feature(3), NodeId::engine_score(12), NodeId::pool(7, 2, 9)}) {
    CHECK(parse_node_id(to_string(id)) == id);
  }
  CHECK(to_string(kH2) == "pool:0:0:1");
  CHECK_THROWS_AS(parse_node_id("pool:0:0"), ArgumentError);
  CHECK_THROWS_AS(parse_node_id("brain:0:0:0"), ArgumentError);
  CHECK_THROWS_AS(parse_node_id("pool:a:0:0"), ArgumentError);
}

TEST_CASE("input digest is frozen FNV-1a over little-endian bit patterns") {
  std::vector<double> a{1.0, 2.0}, b{2.0, 1.0}, empty;
  CHECK(input_digest(a) == 0x2f121cea1c5c97f8ULL);
  CHECK(input_digest(b) == 0x6212281e87320198ULL);
  CHECK(input_digest(empty) == 0xcbf29ce484222325ULL);
  CHECK(input_digest(a) == input_digest(a));
  std::vector<double> nan{1.0, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(input_digest(nan), DataError);
}

TEST_CASE("decision id depends on every identity component") {
  const auto base = make_decision_id(1, 2, {}, 3);
  CHECK(base.size() == 16);
  CHECK(base == make_decision_id(1, 2, {}, 3));
  CHECK(base != make_decision_id(9, 2, {}, 3));
  CHECK(base != make_decision_id(1, 9, {}, 3));
  CHECK(base != make_decision_id(1, 2, AblationMask{kH1}, 3));
  CHECK(base != make_decision_id(1, 2, {}, 9));
}

namespace {

ActivationTrace random_trace(Rng& rng) {
  ActivationTrace t;
  t.input_digest = rng.next_u64();
  t.seed = rng.next_u64();
  t.decision_id = to_hex(rng.next_u64());
  const auto n = 1 + rng.below(12);
  for (std::uint32_t i = 0; i < n; ++i) {
    // Arbitrary finite bit patterns, including subnormals and signed zeros.
    double v = 0.0;
    do {
      v = std::bit_cast<double>(rng.next_u64());
    } while (!std::isfinite(v));
    if (i == 0) v = -0.0;
    t.records.push_back({NodeId::pool(0, 0, i), v});
  }
  t.decision.scores = {rng.uniform01(), rng.uniform01() * 1e-300, 5e-324};
  t.decision.label = rng.below(3);
  t.decision.margin = rng.uniform01();
  if (rng.below(2)) t.mask_applied = AblationMask{NodeId::pool(0, 0, 0)};
  return t;
}

}  // namespace

TEST_CASE("jsonl store round-trips bit-exactly across reopen") {
  const auto path = temp_file("roundtrip.jsonl");
  Rng rng(4);
  std::vector<ActivationTrace> written;
  {
    JsonlTraceStore store(path);
    for (int i = 0; i < 50; ++i) {
      written.push_back(random_trace(rng));
      CHECK(store.persist(written.back()) == PersistResult::Appended);
    }
  }
  JsonlTraceStore reopened(path);
  const auto loaded = reopened.load();
  REQUIRE(loaded.size() == written.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) CHECK(bitwise_equal(loaded[i], written[i]));

  TraceFilter by_digest;
  by_digest.input_digest = written[7].input_digest;
  CHECK(reopened.load(by_digest).size() == 1);
}

TEST_CASE("store idempotency, collisions and absent keys") {
  const auto path = temp_file("idem.jsonl");
  JsonlTraceStore store(path);
  std::vector<double> x{1, 0};
  const auto trace = pool_decide(xor_pool(), x).trace;
  CHECK(store.persist(trace) == PersistResult::Appended);
  CHECK(store.persist(trace) == PersistResult::AlreadyPresent);
  CHECK(store.size() == 1);
  CHECK(JsonlTraceStore(path).size() == 1);

  auto forged = trace;
  forged.decision.margin = 0.25;
  CHECK_THROWS_AS(store.persist(forged), IntegrityError);

  TraceFilter missing;
  missing.decision_id = "0000000000000000";
  CHECK(store.load(missing).empty());

  TraceFilter hit;
  hit.decision_id = trace.decision_id;
  auto found = store.load(hit);
  REQUIRE(found.size() == 1);
  CHECK(found.front() == trace);
}

TEST_CASE("memory store follows the same rules") {
  MemoryTraceStore store;
  std::vector<double> x{0, 1};
  const auto trace = pool_decide(xor_pool(), x).trace;
  store.persist(trace);
  store.persist(trace);
  CHECK(store.size() == 1);
  auto forged = trace;
  forged.seed = 99;
  CHECK_THROWS_AS(store.persist(forged), IntegrityError);
}

TEST_CASE("unreadable store file is a storage error") {
  const auto path = temp_file("garbage.jsonl");
  std::ofstream(path) << "{not json\n";
  CHECK_THROWS_AS(JsonlTraceStore{path}, StorageError);
}

TEST_CASE("decision id is stable for identical inputs") {
  std::vector<double> x{1, 1};
  const auto a = pool_decide(xor_pool(5), x).trace.decision_id;
  CHECK(a == pool_decide(xor_pool(5), x).trace.decision_id);
  CHECK(a != pool_decide(xor_pool(6), x).trace.decision_id);
}
