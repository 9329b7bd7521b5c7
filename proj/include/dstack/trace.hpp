#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dstack/engine.hpp"
#include "dstack/node.hpp"
#include "json.hpp"

namespace dstack {

// Complete per-node record of one decision.
struct ActivationTrace {
  std::string decision_id;
  std::uint64_t input_digest = 0;
  std::uint64_t seed = 0;
  Activations records;
  Decision decision;
  AblationMask mask_applied;

  friend bool operator==(const ActivationTrace&, const ActivationTrace&) = default;
};

// FNV-1a over the IEEE-754 bit patterns of the entries, little-endian, in
// order. Throws DataError on NaN or infinite entries.
std::uint64_t input_digest(std::span<const double> input);

// Pure function of its arguments, rendered as 16 lowercase hex digits.
std::string make_decision_id(std::uint64_t config_digest, std::uint64_t input_digest, const AblationMask& mask,
                             std::uint64_t seed);

// Bit-level comparison of every real value (distinguishes -0.0 from 0.0).
bool bitwise_equal(const ActivationTrace& a, const ActivationTrace& b);

nlohmann::json decision_to_json(const Decision& d);
Decision decision_from_json(const nlohmann::json& j);
nlohmann::json mask_to_json(const AblationMask& mask);
AblationMask mask_from_json(const nlohmann::json& j);

// One JSON-lines record. Reals are written as shortest round-trip decimals.
nlohmann::json trace_to_json(const ActivationTrace& trace);
ActivationTrace trace_from_json(const nlohmann::json& j);

struct TraceFilter {
  std::optional<std::string> decision_id;
  std::optional<std::uint64_t> input_digest;

  bool matches(const ActivationTrace& t) const;
};

enum class PersistResult { Appended, AlreadyPresent };

// Append-only trace storage keyed by decision_id. Re-persisting identical
// content is a no-op; different content under an existing id throws
// IntegrityError. Appends are not synchronized: one writer per store.
class TraceStore {
 public:
  virtual ~TraceStore() = default;
  virtual PersistResult persist(const ActivationTrace& trace) = 0;
  // Matches in insertion order; an unknown id yields an empty result.
  virtual std::vector<ActivationTrace> load(const TraceFilter& filter = {}) const = 0;
  virtual std::size_t size() const = 0;
};

class MemoryTraceStore : public TraceStore {
 public:
  PersistResult persist(const ActivationTrace& trace) override;
  std::vector<ActivationTrace> load(const TraceFilter& filter = {}) const override;
  std::size_t size() const override { return lines_.size(); }

 private:
  std::vector<std::string> ids_;
  std::vector<std::string> lines_;
  std::vector<ActivationTrace> traces_;
};

// JSON-lines file, one trace per line. The file is scanned once on open;
// a missing file is an empty store.
class JsonlTraceStore : public TraceStore {
 public:
  explicit JsonlTraceStore(std::filesystem::path path);

  PersistResult persist(const ActivationTrace& trace) override;
  std::vector<ActivationTrace> load(const TraceFilter& filter = {}) const override;
  std::size_t size() const override { return lines_.size(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::vector<std::string> ids_;
  std::vector<std::string> lines_;
};

}  // namespace dstack
