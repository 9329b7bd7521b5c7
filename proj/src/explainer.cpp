#include "dstack/explainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "dstack/errors.hpp"
#include "dstack/hash.hpp"
#include "dstack/replay.hpp"
#include "dstack/rng.hpp"

namespace dstack {

using nlohmann::json;

EngramStrategy EngramStrategy::top_k(double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ArgumentError("top_k fraction must be in (0, 1], got " + std::to_string(fraction));
  }
  return {Kind::TopKFraction, fraction};
}

EngramStrategy EngramStrategy::abs_threshold(double threshold) {
  if (!(threshold >= 0.0) || !std::isfinite(threshold)) {
    throw ArgumentError("abs threshold must be finite and >= 0, got " + std::to_string(threshold));
  }
  return {Kind::AbsThreshold, threshold};
}

EngramStrategy EngramStrategy::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ArgumentError("strategy must be top_k:<frac> or abs:<t>");
  const auto kind = text.substr(0, colon);
  const auto value_text = text.substr(colon + 1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
  if (value_text.empty() || ec != std::errc{} || ptr != value_text.data() + value_text.size()) {
    throw ArgumentError("strategy parameter '" + std::string(value_text) + "' is not a number");
  }
  if (kind == "top_k") return top_k(value);
  if (kind == "abs") return abs_threshold(value);
  throw ArgumentError("unknown strategy kind '" + std::string(kind) + "'");
}

std::string EngramStrategy::to_string() const {
  std::ostringstream os;
  os.precision(17);
  os << (kind == Kind::TopKFraction ? "top_k:" : "abs:") << parameter;
  return os.str();
}

namespace {

// ceil(fraction * n), snapping products within 1e-9 of an integer so that
// e.g. 0.1 * 30 selects 3 nodes rather than 4.
std::size_t top_k_count(double fraction, std::size_t n) {
  const double exact = fraction * static_cast<double>(n);
  const double nearest = std::round(exact);
  const double count = std::abs(exact - nearest) < 1e-9 ? nearest : std::ceil(exact);
  return std::min(n, static_cast<std::size_t>(count));
}

bool flips(const PoolConfig& config, std::span<const double> input, const AblationMask& mask, std::size_t original) {
  return pool_forward(config, input, mask).decision.label != original;
}

}  // namespace

Engram extract_engram(const ActivationTrace& trace, const EngramStrategy& strategy, const NodeRegistry& registry) {
  if (!trace.mask_applied.empty()) {
    throw PreconditionError("engrams are extracted from unablated decisions only; trace " + trace.decision_id +
                            " was recorded under a mask");
  }
  // Validate the parameter even for hand-built strategies.
  if (strategy.kind == EngramStrategy::Kind::TopKFraction) {
    EngramStrategy::top_k(strategy.parameter);
  } else {
    EngramStrategy::abs_threshold(strategy.parameter);
  }

  std::vector<NodeActivation> ablatable;
  for (const auto& info : registry.nodes()) {
    if (!info.ablatable) continue;
    auto it = std::lower_bound(trace.records.begin(), trace.records.end(), info.id,
                               [](const NodeActivation& r, const NodeId& id) { return r.node < id; });
    if (it == trace.records.end() || it->node != info.id) {
      throw PreconditionError("trace " + trace.decision_id + " has no record for node " + to_string(info.id));
    }
    ablatable.push_back(*it);
  }

  Engram engram;
  engram.strategy = strategy;
  engram.source_decision_id = trace.decision_id;
  if (strategy.kind == EngramStrategy::Kind::AbsThreshold) {
    for (const auto& a : ablatable) {
      if (std::abs(a.value) > strategy.parameter) engram.nodes.insert(a.node);
    }
    return engram;
  }

  std::map<std::pair<Component, std::uint32_t>, std::vector<NodeActivation>> populations;
  for (const auto& a : ablatable) populations[{a.node.component, a.node.model_index}].push_back(a);
  for (auto& [key, members] : populations) {
    // members arrive in canonical order; stable_sort keeps it among equal magnitudes.
    std::stable_sort(members.begin(), members.end(), [](const NodeActivation& a, const NodeActivation& b) {
      return std::abs(a.value) > std::abs(b.value);
    });
    const auto take = top_k_count(strategy.parameter, members.size());
    for (std::size_t i = 0; i < take; ++i) engram.nodes.insert(members[i].node);
  }
  return engram;
}

Engram explicit_engram(const PoolConfig& config, std::span<const double> input, AblationMask nodes) {
  check_mask(config, nodes);
  Engram e;
  e.nodes = std::move(nodes);
  e.source_decision_id = pool_decide(config, input).trace.decision_id;
  return e;
}

ExplanationReport causal_test(const PoolConfig& config, std::span<const double> input, const Engram& engram,
                              std::size_t num_controls, std::uint64_t seed, Exec exec) {
  config.validate();
  check_mask(config, engram.nodes);
  const auto registry = register_nodes(config);

  const auto unablated = pool_decide(config, input);
  ExplanationReport report;
  report.decision_id = unablated.trace.decision_id;
  report.config_digest = config_digest(config);
  report.input_digest = unablated.trace.input_digest;
  report.input.assign(input.begin(), input.end());
  report.seed = seed;
  report.engram = engram;
  report.original = unablated.decision;
  report.ablated = pool_forward(config, input, engram.nodes).decision;
  report.verdict = report.ablated.label != report.original.label ? Verdict::Causal : Verdict::NonCausal;
  report.num_controls = num_controls;

  std::vector<NodeId> complement;
  for (const auto& id : registry.ablatable_nodes()) {
    if (!engram.nodes.contains(id)) complement.push_back(id);
  }
  const std::size_t size = engram.nodes.size();
  if (size > 0 && complement.size() < size) {
    report.controls_skipped = true;
  } else if (size > 0) {
    std::vector<AblationMask> masks;
    masks.reserve(num_controls);
    for (std::size_t i = 0; i < num_controls; ++i) {
      Rng rng(derive_seed(seed, i));
      auto pool = complement;
      for (std::size_t j = 0; j < size; ++j) {
        const auto pick = j + static_cast<std::size_t>(rng.below(pool.size() - j));
        std::swap(pool[j], pool[pick]);
      }
      masks.emplace_back(std::vector<NodeId>(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(size)));
    }
    const auto decisions = replay(exec, config, input, masks);
    std::size_t flipped = 0;
    for (std::size_t i = 0; i < masks.size(); ++i) {
      const bool f = decisions[i].label != report.original.label;
      flipped += f ? 1 : 0;
      report.controls.push_back({std::move(masks[i]), decisions[i].label, f});
    }
    if (!report.controls.empty()) {
      report.control_flip_rate = static_cast<double>(flipped) / static_cast<double>(report.controls.size());
    }
  }
  report.specificity = 1.0 - report.control_flip_rate;

  if (report.verdict == Verdict::Causal) {
    auto shrunk = greedy_shrink(config, input, engram.nodes);
    if (!shrunk.flips) throw InvariantError("causal engram did not flip under greedy_shrink replay");
    report.minimal_subset = std::move(shrunk.nodes);
  }
  return report;
}

ExplanationReport explain(const PoolConfig& config, std::span<const double> input, const EngramStrategy& strategy,
                          std::size_t num_controls, std::uint64_t seed, Exec exec) {
  const auto registry = register_nodes(config);
  const auto decided = pool_decide(config, input);
  const auto engram = extract_engram(decided.trace, strategy, registry);
  return causal_test(config, input, engram, num_controls, seed, exec);
}

std::optional<AblationMask> minimal_flip_subset_exhaustive(const PoolConfig& config, std::span<const double> input,
                                                           const AblationMask& candidates, std::size_t max_size,
                                                           Exec exec) {
  if (candidates.size() > kExhaustiveCandidateLimit) {
    throw BudgetError("exhaustive search is limited to " + std::to_string(kExhaustiveCandidateLimit) +
                      " candidates, got " + std::to_string(candidates.size()));
  }
  config.validate();
  check_mask(config, candidates);
  const auto nodes = candidates.nodes();
  const std::size_t n = nodes.size();
  const std::size_t original = pool_forward(config, input).decision.label;

  auto mask_of = [&](const std::vector<std::size_t>& idx) {
    std::vector<NodeId> picked;
    picked.reserve(idx.size());
    for (auto i : idx) picked.push_back(nodes[i]);
    return AblationMask(std::move(picked));
  };
  // Advances idx to the next k-combination of [0, n) in lexicographic order.
  auto next_combination = [n](std::vector<std::size_t>& idx) {
    const std::size_t k = idx.size();
    for (std::size_t i = k; i-- > 0;) {
      if (idx[i] < n - k + i) {
        ++idx[i];
        for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
        return true;
      }
    }
    return false;
  };

  constexpr std::size_t kChunk = 1024;
  for (std::size_t k = 1; k <= std::min(max_size, n); ++k) {
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    bool more = true;
    if (exec == Exec::Serial) {
      while (more) {
        auto mask = mask_of(idx);
        if (flips(config, input, mask, original)) return mask;
        more = next_combination(idx);
      }
      continue;
    }
    std::vector<AblationMask> chunk;
    while (more) {
      chunk.clear();
      while (more && chunk.size() < kChunk) {
        chunk.push_back(mask_of(idx));
        more = next_combination(idx);
      }
      const auto decisions = replay_parallel(config, input, chunk);
      for (std::size_t i = 0; i < chunk.size(); ++i) {
        if (decisions[i].label != original) return chunk[i];
      }
    }
  }
  return std::nullopt;
}

ShrinkResult greedy_shrink(const PoolConfig& config, std::span<const double> input, const AblationMask& engram) {
  check_mask(config, engram);
  const std::size_t original = pool_forward(config, input).decision.label;
  ShrinkResult result{engram, flips(config, input, engram, original)};
  if (!result.flips) return result;

  bool removed = true;
  while (removed) {
    removed = false;
    const std::vector<NodeId> snapshot(result.nodes.begin(), result.nodes.end());
    for (const auto& node : snapshot) {
      auto trial = result.nodes;
      trial.erase(node);
      if (flips(config, input, trial, original)) {
        result.nodes = std::move(trial);
        removed = true;
      }
    }
  }
  return result;
}

const char* verdict_name(Verdict v) { return v == Verdict::Causal ? "CAUSAL" : "NON_CAUSAL"; }

json report_to_json(const ExplanationReport& r) {
  json strategy = nullptr;
  if (r.engram.strategy) {
    strategy = json{{"kind", r.engram.strategy->kind == EngramStrategy::Kind::TopKFraction ? "top_k" : "abs"},
                    {"parameter", r.engram.strategy->parameter}};
  }
  json controls = json::array();
  for (const auto& c : r.controls) {
    controls.push_back(json{{"mask", mask_to_json(c.mask)}, {"label", c.label}, {"flipped", c.flipped}});
  }
  return json{
      {"report_version", kReportVersion},
      {"decision_id", r.decision_id},
      {"config_digest", to_hex(r.config_digest)},
      {"input_digest", to_hex(r.input_digest)},
      {"input", r.input},
      {"seed", r.seed},
      {"engram",
       json{{"nodes", mask_to_json(r.engram.nodes)},
            {"strategy", strategy},
            {"source_decision_id", r.engram.source_decision_id}}},
      {"original", decision_to_json(r.original)},
      {"ablated", decision_to_json(r.ablated)},
      {"verdict", verdict_name(r.verdict)},
      {"margin_delta", r.ablated.margin - r.original.margin},
      {"num_controls", r.num_controls},
      {"controls_skipped", r.controls_skipped},
      {"controls", controls},
      {"control_flip_rate", r.control_flip_rate},
      {"specificity", r.specificity},
      {"minimal_subset", r.minimal_subset ? mask_to_json(*r.minimal_subset) : json(nullptr)},
  };
}

ExplanationReport report_from_json(const json& doc) {
  try {
    if (doc.at("report_version").get<int>() != kReportVersion) {
      throw DataError("unsupported report_version " + doc.at("report_version").dump());
    }
    ExplanationReport r;
    r.decision_id = doc.at("decision_id").get<std::string>();
    r.config_digest = parse_hex_u64(doc.at("config_digest").get<std::string>());
    r.input_digest = parse_hex_u64(doc.at("input_digest").get<std::string>());
    r.input = doc.at("input").get<std::vector<double>>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    const auto& e = doc.at("engram");
    r.engram.nodes = mask_from_json(e.at("nodes"));
    r.engram.source_decision_id = e.at("source_decision_id").get<std::string>();
    if (!e.at("strategy").is_null()) {
      const auto kind = e.at("strategy").at("kind").get<std::string>();
      const auto param = e.at("strategy").at("parameter").get<double>();
      r.engram.strategy = kind == "top_k" ? EngramStrategy::top_k(param) : EngramStrategy::abs_threshold(param);
    }
    r.original = decision_from_json(doc.at("original"));
    r.ablated = decision_from_json(doc.at("ablated"));
    r.verdict = doc.at("verdict").get<std::string>() == "CAUSAL" ? Verdict::Causal : Verdict::NonCausal;
    r.num_controls = doc.at("num_controls").get<std::size_t>();
    r.controls_skipped = doc.at("controls_skipped").get<bool>();
    for (const auto& c : doc.at("controls")) {
      r.controls.push_back({mask_from_json(c.at("mask")), c.at("label").get<std::size_t>(), c.at("flipped").get<bool>()});
    }
    r.control_flip_rate = doc.at("control_flip_rate").get<double>();
    r.specificity = doc.at("specificity").get<double>();
    if (!doc.at("minimal_subset").is_null()) r.minimal_subset = mask_from_json(doc.at("minimal_subset"));
    return r;
  } catch (const json::exception& ex) {
    throw DataError(std::string("malformed report: ") + ex.what());
  }
}

}  // namespace dstack
