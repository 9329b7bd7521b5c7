#include "dstack/trace.hpp"

#include <bit>
#include <cmath>
#include <fstream>

#include "dstack/errors.hpp"
#include "dstack/hash.hpp"

namespace dstack {

using nlohmann::json;

std::uint64_t input_digest(std::span<const double> input) {
  Fnv1a64 h;
  for (std::size_t i = 0; i < input.size(); ++i) {
    if (!std::isfinite(input[i])) {
      throw DataError("input entry " + std::to_string(i) + " is not a finite number");
    }
    h.f64(input[i]);
  }
  return h.digest();
}

std::string make_decision_id(std::uint64_t config_digest, std::uint64_t input_digest, const AblationMask& mask,
                             std::uint64_t seed) {
  Fnv1a64 h;
  h.u64(config_digest);
  h.u64(input_digest);
  h.u64(mask.size());
  for (const auto& n : mask) {
    h.byte(static_cast<std::uint8_t>(n.component));
    h.u32(n.model_index);
    h.u32(n.layer);
    h.u32(n.unit);
  }
  h.u64(seed);
  return to_hex(h.digest());
}

namespace {

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same_bits(a[i], b[i])) return false;
  }
  return true;
}

template <typename T>
T field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw DataError(std::string("missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception& e) {
    throw DataError(std::string("field '") + name + "': " + e.what());
  }
}

}  // namespace

bool bitwise_equal(const ActivationTrace& a, const ActivationTrace& b) {
  if (a.decision_id != b.decision_id || a.input_digest != b.input_digest || a.seed != b.seed ||
      a.mask_applied != b.mask_applied || a.records.size() != b.records.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    if (a.records[i].node != b.records[i].node || !same_bits(a.records[i].value, b.records[i].value)) return false;
  }
  return a.decision.label == b.decision.label && same_bits(a.decision.margin, b.decision.margin) &&
         same_bits(a.decision.scores, b.decision.scores);
}

json decision_to_json(const Decision& d) {
  return json{{"scores", d.scores}, {"label", d.label}, {"margin", d.margin}};
}

Decision decision_from_json(const json& j) {
  Decision d;
  d.scores = field<std::vector<double>>(j, "scores");
  d.label = field<std::size_t>(j, "label");
  d.margin = field<double>(j, "margin");
  return d;
}

json mask_to_json(const AblationMask& mask) {
  json arr = json::array();
  for (const auto& n : mask) arr.push_back(to_string(n));
  return arr;
}

AblationMask mask_from_json(const json& j) {
  if (!j.is_array()) throw DataError("mask must be an array of node ids");
  std::vector<NodeId> nodes;
  for (const auto& e : j) {
    if (!e.is_string()) throw DataError("mask entries must be node id strings");
    try {
      nodes.push_back(parse_node_id(e.get<std::string>()));
    } catch (const ArgumentError& err) {
      throw DataError(err.what());
    }
  }
  return AblationMask(std::move(nodes));
}

json trace_to_json(const ActivationTrace& trace) {
  json records = json::array();
  for (const auto& r : trace.records) records.push_back(json::array({to_string(r.node), r.value}));
  // nlohmann::json keeps object keys sorted, so the dumped line is canonical.
  return json{{"decision_id", trace.decision_id},
              {"input_digest", to_hex(trace.input_digest)},
              {"seed", trace.seed},
              {"mask", mask_to_json(trace.mask_applied)},
              {"records", std::move(records)},
              {"decision", decision_to_json(trace.decision)}};
}

ActivationTrace trace_from_json(const json& j) {
  ActivationTrace t;
  t.decision_id = field<std::string>(j, "decision_id");
  t.input_digest = parse_hex_u64(field<std::string>(j, "input_digest"));
  t.seed = field<std::uint64_t>(j, "seed");
  t.mask_applied = mask_from_json(j.at("mask"));
  const auto& records = j.at("records");
  if (!records.is_array()) throw DataError("records must be an array");
  for (const auto& r : records) {
    if (!r.is_array() || r.size() != 2 || !r[0].is_string() || !r[1].is_number()) {
      throw DataError("records entries must be [node id, value] pairs");
    }
    NodeId id;
    try {
      id = parse_node_id(r[0].get<std::string>());
    } catch (const ArgumentError& err) {
      throw DataError(err.what());
    }
    t.records.push_back({id, r[1].get<double>()});
  }
  t.decision = decision_from_json(j.at("decision"));
  return t;
}

bool TraceFilter::matches(const ActivationTrace& t) const {
  if (decision_id && t.decision_id != *decision_id) return false;
  if (input_digest && t.input_digest != *input_digest) return false;
  return true;
}

namespace {

// Shared id -> canonical line bookkeeping for both stores.
PersistResult check_existing(const std::vector<std::string>& ids, const std::vector<std::string>& lines,
                             const std::string& id, const std::string& line) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] != id) continue;
    if (lines[i] == line) return PersistResult::AlreadyPresent;
    throw IntegrityError("decision_id " + id + " is already stored with different content");
  }
  return PersistResult::Appended;
}

}  // namespace

PersistResult MemoryTraceStore::persist(const ActivationTrace& trace) {
  std::string line = trace_to_json(trace).dump();
  if (check_existing(ids_, lines_, trace.decision_id, line) == PersistResult::AlreadyPresent) {
    return PersistResult::AlreadyPresent;
  }
  ids_.push_back(trace.decision_id);
  lines_.push_back(std::move(line));
  traces_.push_back(trace);
  return PersistResult::Appended;
}

std::vector<ActivationTrace> MemoryTraceStore::load(const TraceFilter& filter) const {
  std::vector<ActivationTrace> out;
  for (const auto& t : traces_) {
    if (filter.matches(t)) out.push_back(t);
  }
  return out;
}

JsonlTraceStore::JsonlTraceStore(std::filesystem::path path) : path_(std::move(path)) {
  std::error_code ec;
  if (!std::filesystem::exists(path_, ec)) return;
  std::ifstream in(path_);
  if (!in) throw StorageError("cannot read trace store " + path_.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto j = json::parse(line);
      auto t = trace_from_json(j);
      ids_.push_back(t.decision_id);
      lines_.push_back(trace_to_json(t).dump());
    } catch (const std::exception& e) {
      throw StorageError(path_.string() + ":" + std::to_string(lineno) + ": unreadable trace: " + e.what());
    }
  }
  if (in.bad()) throw StorageError("error while reading trace store " + path_.string());
}

PersistResult JsonlTraceStore::persist(const ActivationTrace& trace) {
  std::string line = trace_to_json(trace).dump();
  if (check_existing(ids_, lines_, trace.decision_id, line) == PersistResult::AlreadyPresent) {
    return PersistResult::AlreadyPresent;
  }
  if (path_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path_.parent_path(), ec);
  }
  std::ofstream out(path_, std::ios::app);
  if (!out) throw StorageError("cannot open trace store " + path_.string() + " for appending");
  out << line << '\n';
  out.flush();
  if (!out) throw StorageError("failed to append to trace store " + path_.string());
  ids_.push_back(trace.decision_id);
  lines_.push_back(std::move(line));
  return PersistResult::Appended;
}

std::vector<ActivationTrace> JsonlTraceStore::load(const TraceFilter& filter) const {
  std::vector<ActivationTrace> out;
  for (std::size_t i = 0; i < lines_.size(); ++i) {
    if (filter.decision_id && ids_[i] != *filter.decision_id) continue;
    auto t = trace_from_json(json::parse(lines_[i]));
    if (filter.matches(t)) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace dstack
