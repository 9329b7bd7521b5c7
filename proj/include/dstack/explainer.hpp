#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dstack/parallel.hpp"
#include "dstack/pool.hpp"
#include "dstack/registry.hpp"
#include "json.hpp"

namespace dstack {

// How the "active" nodes of a decision are picked.
//   TopKFraction: per population (the ablatable nodes of one pool model, or
//     the engine feature slots), the ceil(fraction * size) nodes of largest
//     |activation|, canonical order breaking ties. fraction in (0, 1].
//   AbsThreshold: every ablatable node with |activation| > threshold >= 0.
struct EngramStrategy {
  enum class Kind { TopKFraction, AbsThreshold };

  Kind kind = Kind::TopKFraction;
  double parameter = 0.1;

  static EngramStrategy top_k(double fraction);
  static EngramStrategy abs_threshold(double threshold);
  // "top_k:<fraction>" or "abs:<threshold>".
  static EngramStrategy parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const EngramStrategy&, const EngramStrategy&) = default;
};

inline constexpr double kDefaultTopKFraction = 0.1;

struct Engram {
  AblationMask nodes;
  std::optional<EngramStrategy> strategy;  // empty when supplied by hand
  std::string source_decision_id;

  friend bool operator==(const Engram&, const Engram&) = default;
};

// Throws PreconditionError if the trace was recorded under a mask or does not
// cover the registry.
Engram extract_engram(const ActivationTrace& trace, const EngramStrategy& strategy, const NodeRegistry& registry);

// Engram for a hand-picked node set, bound to the unablated decision.
Engram explicit_engram(const PoolConfig& config, std::span<const double> input, AblationMask nodes);

enum class Verdict { Causal, NonCausal };

struct ControlResult {
  AblationMask mask;
  std::size_t label = 0;
  bool flipped = false;

  friend bool operator==(const ControlResult&, const ControlResult&) = default;
};

struct ExplanationReport {
  std::string decision_id;
  std::uint64_t config_digest = 0;
  std::uint64_t input_digest = 0;
  std::vector<double> input;
  std::uint64_t seed = 0;

  Engram engram;
  Decision original;
  Decision ablated;
  Verdict verdict = Verdict::NonCausal;

  std::size_t num_controls = 0;
  bool controls_skipped = false;  // complement smaller than the engram
  std::vector<ControlResult> controls;
  double control_flip_rate = 0.0;
  double specificity = 1.0;

  // 1-minimal flipping subset of the engram, for causal verdicts.
  std::optional<AblationMask> minimal_subset;
};

inline constexpr int kReportVersion = 1;

// Replays the decision with the engram ablated, then with num_controls random
// equal-size masks drawn from the ablatable complement. Control i is drawn
// from Rng(derive_seed(seed, i)), so the report is a pure function of its
// arguments regardless of `exec`.
ExplanationReport causal_test(const PoolConfig& config, std::span<const double> input, const Engram& engram,
                              std::size_t num_controls, std::uint64_t seed, Exec exec = Exec::Parallel);

// pool_decide + extract_engram + causal_test.
ExplanationReport explain(const PoolConfig& config, std::span<const double> input, const EngramStrategy& strategy,
                          std::size_t num_controls, std::uint64_t seed, Exec exec = Exec::Parallel);

inline constexpr std::size_t kExhaustiveCandidateLimit = 20;

// Smallest label-flipping subset of `candidates`, searching sizes 1..max_size
// and lexicographic (canonical) order within a size. Throws BudgetError above
// kExhaustiveCandidateLimit candidates.
std::optional<AblationMask> minimal_flip_subset_exhaustive(const PoolConfig& config, std::span<const double> input,
                                                           const AblationMask& candidates, std::size_t max_size,
                                                           Exec exec = Exec::Parallel);

struct ShrinkResult {
  AblationMask nodes;
  bool flips = false;
};

// Drops nodes in canonical order while the label stays flipped, until no
// single removal keeps it flipped. A non-flipping engram comes back as is.
ShrinkResult greedy_shrink(const PoolConfig& config, std::span<const double> input, const AblationMask& engram);

nlohmann::json report_to_json(const ExplanationReport& report);
ExplanationReport report_from_json(const nlohmann::json& doc);

const char* verdict_name(Verdict v);

}  // namespace dstack
