#include "dstack/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>

#include "CLI11.hpp"
#include "dstack/dataset.hpp"
#include "dstack/errors.hpp"
#include "dstack/explainer.hpp"
#include "dstack/hash.hpp"
#include "dstack/plot.hpp"
#include "dstack/pool_train.hpp"
#include "dstack/registry.hpp"
#include "dstack/run_config.hpp"
#include "dstack/serialize.hpp"

namespace dstack {

using nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string model;
  std::string traces;
  std::string report;
  std::string input;
  std::string strategy;
  std::optional<std::size_t> controls;
  std::string engram;
  std::string mask;
  std::string plot;
  std::string candidates;
  std::optional<std::size_t> max_size;
  std::string id;
  bool serial = false;
};

std::vector<double> parse_input(const std::string& text) {
  if (text.empty()) throw UsageError("--input is required");
  std::vector<double> values;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    const auto cell = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
      throw DataError("--input entry '" + cell + "' is not a finite number");
    }
    values.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return values;
}

AblationMask parse_node_list(const std::string& text) {
  std::vector<NodeId> nodes;
  if (text.empty()) return {};
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    nodes.push_back(parse_node_id(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return AblationMask(std::move(nodes));
}

// Resolved view of the run: config file plus command-line overrides.
struct Run {
  RunConfig cfg;
  std::uint64_t seed = 0;
};

Run resolve_run(const Options& o) {
  Run run;
  if (!o.config.empty()) run.cfg = load_run_config(o.config);
  if (!o.model.empty()) run.cfg.model_path = o.model;
  if (!o.traces.empty()) run.cfg.traces_path = o.traces;
  if (!o.report.empty()) run.cfg.report_path = o.report;
  if (!o.strategy.empty()) run.cfg.strategy = EngramStrategy::parse(o.strategy);
  if (o.controls) run.cfg.controls = *o.controls;
  if (o.seed) run.cfg.seed = o.seed;
  return run;
}

PoolConfig load_model(Run& run) {
  if (!run.cfg.model_path) throw UsageError("no model file: pass --model or set paths.model in --config");
  auto pool = load_pool(*run.cfg.model_path);
  if (run.cfg.seed) pool.seed = *run.cfg.seed;
  run.seed = pool.seed;
  return pool;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  auto run = resolve_run(o);
  if (!run.cfg.dataset) throw ConfigError("train needs 'dataset' in the config");
  if (!run.cfg.pool) throw ConfigError("train needs a 'pool' section in the config");
  if (!run.cfg.model_path) throw UsageError("train needs paths.model in the config or --model");
  const auto table = load_dataset(*run.cfg.dataset);
  err << "training " << run.cfg.pool->models.size() << " pool model(s) on " << table.rows() << " rows, "
      << table.num_classes << " classes\n";
  const auto pool = train_pool(*run.cfg.pool, table.samples, table.num_classes, run.cfg.seed.value_or(0));
  save_pool(pool, *run.cfg.model_path);
  const auto registry = register_nodes(pool);
  out << json{{"model", run.cfg.model_path->string()},
              {"config_digest", to_hex(config_digest(pool))},
              {"train_accuracy", accuracy(pool, table.samples)},
              {"nodes", registry.size()},
              {"ablatable_nodes", registry.ablatable_count()}}
             .dump()
      << "\n";
  return kExitOk;
}

int cmd_decide(const Options& o, std::ostream& out, std::ostream& err) {
  auto run = resolve_run(o);
  const auto pool = load_model(run);
  const auto input = parse_input(o.input);
  const auto mask = parse_node_list(o.mask);
  const auto decided = pool_decide(pool, input, mask);
  json stored = nullptr;
  if (run.cfg.traces_path) {
    JsonlTraceStore store(*run.cfg.traces_path);
    const auto ack = store.persist(decided.trace);
    stored = ack == PersistResult::Appended ? "appended" : "already_present";
    err << "trace " << decided.trace.decision_id << " " << stored.get<std::string>() << " to "
        << run.cfg.traces_path->string() << "\n";
  }
  out << json{{"decision_id", decided.trace.decision_id},
              {"input_digest", to_hex(decided.trace.input_digest)},
              {"seed", decided.trace.seed},
              {"mask", mask_to_json(mask)},
              {"decision", decision_to_json(decided.decision)},
              {"trace_store", stored}}
             .dump()
      << "\n";
  return kExitOk;
}

int cmd_explain(const Options& o, std::ostream& out, std::ostream& err) {
  auto run = resolve_run(o);
  const auto pool = load_model(run);
  const auto input = parse_input(o.input);
  const auto registry = register_nodes(pool);
  const auto decided = pool_decide(pool, input);

  Engram engram;
  if (!o.engram.empty()) {
    engram.nodes = parse_node_list(o.engram);
    check_mask(pool, engram.nodes);
    engram.source_decision_id = decided.trace.decision_id;
  } else {
    engram = extract_engram(decided.trace, run.cfg.strategy, registry);
  }
  const auto exec = o.serial ? Exec::Serial : Exec::Parallel;
  const auto report = causal_test(pool, input, engram, run.cfg.controls, run.seed, exec);
  const auto doc = report_to_json(report);

  if (run.cfg.traces_path) JsonlTraceStore(*run.cfg.traces_path).persist(decided.trace);
  if (!o.plot.empty()) {
    write_text_file(o.plot, activation_svg(decided.trace, registry, engram.nodes));
    err << "wrote activation plot " << o.plot << "\n";
  }
  err << "verdict " << verdict_name(report.verdict) << ": label " << report.original.label << " -> "
      << report.ablated.label << " with " << engram.nodes.size() << " engram node(s) ablated\n";

  if (!run.cfg.report_path) {
    out << doc.dump(2) << "\n";
    return kExitOk;
  }
  write_text_file(*run.cfg.report_path, doc.dump(2) + "\n");
  out << json{{"decision_id", report.decision_id},
              {"verdict", verdict_name(report.verdict)},
              {"original_label", report.original.label},
              {"ablated_label", report.ablated.label},
              {"engram", mask_to_json(report.engram.nodes)},
              {"control_flip_rate", report.control_flip_rate},
              {"specificity", report.specificity},
              {"minimal_subset", doc.at("minimal_subset")},
              {"report", run.cfg.report_path->string()}}
             .dump()
      << "\n";
  return kExitOk;
}

int cmd_oracle(const Options& o, std::ostream& out, std::ostream&) {
  auto run = resolve_run(o);
  const auto pool = load_model(run);
  const auto input = parse_input(o.input);
  AblationMask candidates;
  if (o.candidates.empty()) {
    candidates = AblationMask(register_nodes(pool).ablatable_nodes());
  } else {
    candidates = parse_node_list(o.candidates);
  }
  const auto max_size = o.max_size.value_or(candidates.size());
  const auto decided = pool_decide(pool, input);
  const auto found =
      minimal_flip_subset_exhaustive(pool, input, candidates, max_size, o.serial ? Exec::Serial : Exec::Parallel);
  json result = nullptr;
  json ablated = nullptr;
  if (found) {
    result = mask_to_json(*found);
    ablated = decision_to_json(pool_forward(pool, input, *found).decision);
  }
  out << json{{"decision_id", decided.trace.decision_id},
              {"original", decision_to_json(decided.decision)},
              {"candidates", candidates.size()},
              {"max_size", max_size},
              {"minimal_subset", result},
              {"ablated", ablated}}
             .dump()
      << "\n";
  return kExitOk;
}

int cmd_inspect(const Options& o, std::ostream& out, std::ostream&) {
  auto run = resolve_run(o);
  if (!o.report.empty() || (o.id.empty() && run.cfg.report_path && !run.cfg.traces_path)) {
    const auto doc = read_json_file(*run.cfg.report_path);
    // Round-trip through the typed report to validate the schema.
    out << report_to_json(report_from_json(doc)).dump(2) << "\n";
    return kExitOk;
  }
  if (!run.cfg.traces_path) throw UsageError("inspect needs --report, or --traces/paths.traces");
  JsonlTraceStore store(*run.cfg.traces_path);
  TraceFilter filter;
  if (!o.id.empty()) filter.decision_id = o.id;
  const auto traces = store.load(filter);
  if (!o.id.empty()) {
    if (traces.empty()) throw DataError("no trace with decision_id " + o.id + " in " + run.cfg.traces_path->string());
    out << trace_to_json(traces.front()).dump(2) << "\n";
    return kExitOk;
  }
  json all = json::array();
  for (const auto& t : traces) all.push_back(trace_to_json(t));
  out << all.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Instrumented decision stacks: record every node, ablate the engram, report the verdict.", "dstack"};
  app.require_subcommand(1, 1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Run config (JSON)");
    sub->add_option("--seed", o.seed, "Seed overriding the config and model");
    sub->add_option("--model", o.model, "Model file overriding paths.model");
  };
  auto* train = app.add_subcommand("train", "Fit pool and engine from the config, write the model file");
  add_common(train);

  auto* decide = app.add_subcommand("decide", "Run one decision, append its trace, print it");
  add_common(decide);
  decide->add_option("--input", o.input, "Comma-separated input reals")->required();
  decide->add_option("--mask", o.mask, "Comma-separated node ids to ablate");
  decide->add_option("--traces", o.traces, "Trace store overriding paths.traces");

  auto* explain_cmd = app.add_subcommand("explain", "Extract the engram, run the causal test, write the report");
  add_common(explain_cmd);
  explain_cmd->add_option("--input", o.input, "Comma-separated input reals")->required();
  explain_cmd->add_option("--strategy", o.strategy, "top_k:<frac> or abs:<t>");
  explain_cmd->add_option("--controls", o.controls, "Number of random control ablations");
  explain_cmd->add_option("--engram", o.engram, "Explicit comma-separated engram node ids");
  explain_cmd->add_option("--report", o.report, "Report file overriding paths.report");
  explain_cmd->add_option("--traces", o.traces, "Trace store overriding paths.traces");
  explain_cmd->add_option("--plot", o.plot, "Write an SVG activation chart here");
  explain_cmd->add_flag("--serial", o.serial, "Use the serial replay kernel");

  auto* oracle = app.add_subcommand("oracle", "Exhaustive smallest label-flipping node subset");
  add_common(oracle);
  oracle->add_option("--input", o.input, "Comma-separated input reals")->required();
  oracle->add_option("--candidates", o.candidates, "Comma-separated node ids (default: every ablatable node)");
  oracle->add_option("--max-size", o.max_size, "Largest subset size searched");
  oracle->add_flag("--serial", o.serial, "Use the serial replay kernel");

  auto* inspect = app.add_subcommand("inspect", "Pretty-print a stored trace or a report");
  inspect->add_option("--config", o.config, "Run config (JSON)");
  inspect->add_option("--traces", o.traces, "Trace store");
  inspect->add_option("--id", o.id, "decision_id to show");
  inspect->add_option("--report", o.report, "Report file");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train(o, out, err);
    if (decide->parsed()) return cmd_decide(o, out, err);
    if (explain_cmd->parsed()) return cmd_explain(o, out, err);
    if (oracle->parsed()) return cmd_oracle(o, out, err);
    if (inspect->parsed()) return cmd_inspect(o, out, err);
    err << app.help();
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const InvariantError& e) {
    err << "internal invariant violated: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace dstack
