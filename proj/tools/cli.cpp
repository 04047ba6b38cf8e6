#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "relbn/bayes_net.hpp"
#include "relbn/dataset.hpp"
#include "relbn/grid.hpp"
#include "relbn/inference.hpp"
#include "relbn/sampler.hpp"

namespace relbn::cli {

namespace {

using json = nlohmann::json;

/// Exception carrying the exit code it should map to.
struct Failure : std::runtime_error {
  Failure(ExitCode c, const std::string& what) : std::runtime_error(what), code(c) {}
  ExitCode code;
};

std::string fmt(double v, const char* spec = "%.17g") {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, spec, v);
  return buffer;
}

GridCase resolve_case(const std::string& name, double load_scale) {
  try {
    return scale_loads(load_case(name), load_scale);
  } catch (const CaseError& e) {
    throw Failure(kConfigError, e.what());
  } catch (const std::invalid_argument& e) {
    throw Failure(kConfigError, e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure(kConfigError, "cannot read '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure(kConfigError, "cannot write '" + path.string() + "'");
  out << text;
}

BayesNet read_model(const std::string& path) {
  try {
    return bayes_net_from_json(read_file(path));
  } catch (const std::invalid_argument& e) {
    throw Failure(kConfigError, "model '" + path + "': " + e.what());
  }
}

NodeId parse_node(const std::string& text) {
  try {
    return NodeId::parse(text);
  } catch (const std::invalid_argument& e) {
    throw Failure(kConfigError, e.what());
  }
}

std::filesystem::path timing_path(const std::filesystem::path& model) {
  auto path = model;
  path += ".timing.json";
  return path;
}

// ---------------------------------------------------------------- sample

struct SampleOptions {
  std::string case_name;
  std::size_t samples = 100000;
  std::optional<std::uint64_t> seed;
  double is_factor = 1.0;
  double is_cap = 0.5;
  double cov = 0.05;
  std::size_t streams = 1;
  std::size_t threads = 0;
  double load_scale = 1.0;
  std::string out;
};

int cmd_sample(const SampleOptions& o, std::ostream& out) {
  if (!o.seed) throw Failure(kConfigError, "--seed is required; runs are never seeded from the clock");
  const auto grid = resolve_case(o.case_name, o.load_scale);
  SamplerConfig config;
  config.seed = *o.seed;
  config.max_samples = o.samples;
  config.cov_threshold = o.cov;
  config.proposal = {o.is_factor, o.is_cap};
  config.streams = o.streams;
  config.threads = o.threads;
  try {
    config.validate();
  } catch (const ConfigError& e) {
    throw Failure(kConfigError, e.what());
  }

  SampleSet set;
  try {
    set = run_sampling(grid, config);
  } catch (const SolverFailure& e) {
    std::string bits;
    for (auto b : e.state().gen_down) bits += static_cast<char>('0' + b);
    bits += '|';
    for (auto b : e.state().line_down) bits += static_cast<char>('0' + b);
    throw Failure(kSolverFailure, std::string(e.what()) + " (state G|L = " + bits + ")");
  }
  const auto estimate = lolp_estimate(set, config.cov_threshold);
  set.metadata = {
      {"case", o.case_name},
      {"load_scale", fmt(o.load_scale)},
      {"seed", std::to_string(config.seed)},
      {"max_samples", std::to_string(config.max_samples)},
      {"is_factor", fmt(o.is_factor)},
      {"is_cap", fmt(o.is_cap)},
      {"cov_threshold", fmt(o.cov)},
      {"streams", std::to_string(o.streams)},
      {"lolp", fmt(estimate.value)},
      {"lolp_std_error", fmt(estimate.std_error)},
      {"n_samples", std::to_string(estimate.n_samples)},
      {"converged", estimate.converged ? "true" : "false"},
  };
  try {
    write_dataset(set, o.out);
  } catch (const DatasetError& e) {
    throw Failure(kConfigError, e.what());
  }
  out << "case " << grid.name << ": " << set.size() << " samples written to " << o.out << '\n'
      << "LOLP = " << fmt(estimate.value, "%.6g") << " (std error " << fmt(estimate.std_error, "%.3g")
      << ", cov " << fmt(estimate.cov(), "%.3g") << ", " << (estimate.converged ? "converged" : "not converged")
      << ")\n";
  return kOk;
}

// ---------------------------------------------------------------- learn

struct LearnOptions {
  std::string case_name;
  double load_scale = 1.0;
  std::string data;
  std::string out;
  double mi_threshold = 1e-3;
  std::size_t max_parents = 8;
  double alpha = 1.0;
};

int cmd_learn(const LearnOptions& o, std::ostream& out) {
  const auto grid = resolve_case(o.case_name, o.load_scale);
  SampleSet samples;
  try {
    samples = read_dataset(o.data);
  } catch (const DatasetError& e) {
    throw Failure(kConfigError, e.what());
  }
  const auto expected = fingerprint(grid);
  if (!(samples.fingerprint == expected))
    throw Failure(kFingerprintMismatch, "dataset was generated for " + samples.fingerprint.name + " (" +
                                            samples.fingerprint.checksum + "), not " + expected.name + " (" +
                                            expected.checksum + ")");
  if (samples.empty()) throw Failure(kConfigError, "dataset is empty");
  LearnerConfig config{o.mi_threshold, o.max_parents};
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw Failure(kConfigError, e.what());
  }

  const auto start = std::chrono::steady_clock::now();
  BayesNet net;
  try {
    net = fit_parameters(learn_structure(samples, config), samples, o.alpha);
  } catch (const AllBusesPrunedError& e) {
    throw Failure(kAllBusesPruned, std::string(e.what()) + "; try --mi-threshold below " + fmt(e.best_mi(), "%.3g") +
                                       " (binary MI never exceeds ln 2 = 0.693)");
  } catch (const std::invalid_argument& e) {
    throw Failure(kConfigError, e.what());
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  net.metadata = samples.metadata;
  net.metadata["mi_threshold"] = fmt(o.mi_threshold);
  net.metadata["max_parents"] = std::to_string(o.max_parents);
  net.metadata["alpha"] = fmt(o.alpha);
  net.metadata["dataset_records"] = std::to_string(samples.size());
  write_file(o.out, to_json(net));
  write_file(timing_path(o.out), json{{"build_seconds", seconds}}.dump(2) + "\n");

  std::size_t b_nodes = 0;
  for (const auto& n : net.dag.nodes) b_nodes += n.kind == NodeKind::B;
  out << "model written to " << o.out << ": " << net.dag.nodes.size() << " nodes (" << b_nodes << " load buses), "
      << net.dag.edge_count() << " edges\n"
      << "structure and parameters built in " << fmt(seconds, "%.3f") << " s\n";
  return kOk;
}

// ---------------------------------------------------------------- query

struct QueryOptions {
  std::string model;
  std::string target;
  std::vector<std::string> evidence;
  bool as_json = false;
};

Evidence parse_evidence(const std::vector<std::string>& items) {
  Evidence evidence;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Failure(kConfigError, "evidence '" + item + "' must look like NODE=0|1");
    const auto value = item.substr(eq + 1);
    if (value != "0" && value != "1") throw Failure(kConfigError, "evidence value in '" + item + "' must be 0 or 1");
    evidence.assignments[parse_node(item.substr(0, eq))] = value == "1" ? 1 : 0;
  }
  return evidence;
}

void require_in_model(const BayesNet& net, NodeId node) {
  if (!net.dag.contains(node)) {
    if (node.kind == NodeKind::B) throw Failure(kBusPruned, BusNotInModelError(node.index).what());
    throw Failure(kConfigError, "node " + node.name() + " is not in the model");
  }
}

int cmd_query(const QueryOptions& o, std::ostream& out) {
  const auto net = read_model(o.model);
  const auto target = parse_node(o.target);
  const auto evidence = parse_evidence(o.evidence);
  require_in_model(net, target);
  for (const auto& [node, value] : evidence.assignments) require_in_model(net, node);
  if (evidence.assignments.contains(target)) throw Failure(kConfigError, "target is also given as evidence");
  Distribution d;
  try {
    d = posterior(net, target, evidence);
  } catch (const ContradictoryEvidence& e) {
    throw Failure(kContradictoryEvidence, e.what());
  }
  std::string given;
  for (const auto& [node, value] : evidence.assignments)
    given += (given.empty() ? "" : ", ") + node.name() + "=" + std::to_string(value);
  if (o.as_json) {
    json doc;
    doc["target"] = target.name();
    doc["evidence"] = json::object();
    for (const auto& [node, value] : evidence.assignments) doc["evidence"][node.name()] = value;
    doc["p"] = d.p1;
    out << doc.dump(2) << '\n';
  } else {
    out << "P(" << target.name() << "=1" << (given.empty() ? "" : " | " + given) << ") = " << fmt(d.p1, "%.6f")
        << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------- report

struct ReportOptions {
  std::string model;
  std::vector<int> rank_buses;
  bool all_components = false;
  std::string format = "json";
  std::string out;
};

json ranking_json(const RankingReport& r) { return json::parse(r.to_json()); }

double metadata_number(const BayesNet& net, const char* key) {
  auto it = net.metadata.find(key);
  return it == net.metadata.end() ? std::numeric_limits<double>::quiet_NaN() : std::strtod(it->second.c_str(), nullptr);
}

int cmd_report(const ReportOptions& o, std::ostream& out) {
  if (o.format != "json" && o.format != "text") throw Failure(kConfigError, "--format must be json or text");
  const auto net = read_model(o.model);
  for (int bus : o.rank_buses)
    if (!net.dag.contains({NodeKind::B, bus})) throw Failure(kBusPruned, BusNotInModelError(bus).what());

  const auto start = std::chrono::steady_clock::now();
  const auto buses = rank_load_buses(net);
  const auto marginal = rank_load_buses_marginal(net);
  std::vector<RankingReport> components;
  for (int bus : o.rank_buses) components.push_back(rank_components(net, bus, o.all_components));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json doc;
  json config = net.metadata;
  config["model"] = o.model;
  config["rank_buses"] = o.rank_buses;
  config["all_components"] = o.all_components;
  config["fingerprint"] = {{"name", net.fingerprint.name}, {"checksum", net.fingerprint.checksum}};
  doc["config"] = std::move(config);
  doc["lolp"] = {{"value", metadata_number(net, "lolp")},
                 {"std_error", metadata_number(net, "lolp_std_error")},
                 {"n_samples", metadata_number(net, "n_samples")},
                 {"converged", net.metadata.contains("converged") && net.metadata.at("converged") == "true"}};
  std::size_t b_nodes = 0, component_nodes = 0;
  for (const auto& n : net.dag.nodes) {
    b_nodes += n.kind == NodeKind::B;
    component_nodes += n.kind == NodeKind::G || n.kind == NodeKind::L;
  }
  doc["structure"] = {{"nodes", net.dag.nodes.size()},
                      {"edges", net.dag.edge_count()},
                      {"load_bus_nodes", b_nodes},
                      {"component_nodes", component_nodes}};
  doc["load_bus_ranking"] = ranking_json(buses);
  doc["load_bus_marginal"] = ranking_json(marginal);
  doc["component_rankings"] = json::object();
  for (const auto& r : components)
    doc["component_rankings"][r.evidence.assignments.begin()->first.name()] = ranking_json(r);
  json timing = {{"inference_seconds", seconds}};
  if (std::filesystem::exists(timing_path(o.model))) {
    try {
      timing["build_seconds"] = json::parse(read_file(timing_path(o.model))).at("build_seconds");
    } catch (const json::exception&) {
    }
  }
  doc["timing"] = std::move(timing);

  std::string text;
  if (o.format == "json") {
    text = doc.dump(2) + "\n";
  } else {
    std::ostringstream os;
    os << "case " << net.fingerprint.name << " (" << net.fingerprint.checksum << ")\n"
       << "LOLP " << fmt(metadata_number(net, "lolp"), "%.6g") << " +/- "
       << fmt(metadata_number(net, "lolp_std_error"), "%.3g") << "\n"
       << "structure: " << net.dag.nodes.size() << " nodes, " << net.dag.edge_count() << " edges\n\n"
       << buses.to_text() << '\n'
       << marginal.to_text();
    for (const auto& r : components) os << '\n' << r.to_text();
    text = os.str();
  }
  if (o.out.empty()) {
    out << text;
  } else {
    write_file(o.out, text);
  }
  return kOk;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const std::string& case_name, std::ostream& out) {
  GridCase grid;
  try {
    grid = load_case(case_name);
  } catch (const CaseError& e) {
    out << "invalid: " << e.what() << '\n';
    return kInvalidCase;
  }
  const auto report = validate_case(grid);
  out << "case " << grid.name << ": " << grid.buses.size() << " buses, " << grid.generators.size()
      << " generators, " << grid.lines.size() << " lines, " << grid.loads.size() << " loads, demand "
      << fmt(grid.total_demand(), "%.6g") << " MW, capacity " << fmt(grid.total_capacity(), "%.6g") << " MW\n"
      << "fingerprint " << fingerprint(grid).checksum << '\n';
  for (const auto& w : report.warnings) out << "warning: " << w << '\n';
  for (const auto& v : report.violations) out << "violation: " << v << '\n';
  out << (report.ok() ? "valid\n" : "invalid\n");
  return report.ok() ? kOk : kInvalidCase;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Composite power-system reliability with Monte Carlo sampling and Bayesian networks", "relbn"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  SampleOptions sample;
  auto* s = app.add_subcommand("sample", "Draw component states and write a training dataset");
  s->add_option("--case", sample.case_name, "Builtin case (rbts, ieee-rts-24) or case file path")->required();
  s->add_option("--samples", sample.samples, "Maximum number of samples");
  s->add_option("--seed", sample.seed, "PRNG seed (mandatory)");
  s->add_option("--is-factor", sample.is_factor, "Importance-sampling distortion factor (1 = plain Monte Carlo)");
  s->add_option("--is-cap", sample.is_cap, "Cap on distorted outage probabilities");
  s->add_option("--cov", sample.cov, "Stop once the LOLP coefficient of variation falls below this");
  s->add_option("--streams", sample.streams, "Independent PRNG streams");
  s->add_option("--threads", sample.threads, "Worker threads (0 = automatic); output does not depend on it");
  s->add_option("--load-scale", sample.load_scale, "Multiply every load by this factor");
  s->add_option("--out", sample.out, "Output CSV (manifest goes to <out>.manifest.json)")->required();

  LearnOptions learn;
  auto* l = app.add_subcommand("learn", "Learn the Bayesian network from a dataset");
  l->add_option("--case", learn.case_name, "Case the dataset was generated from")->required();
  l->add_option("--load-scale", learn.load_scale, "Load scale used when sampling");
  l->add_option("--data", learn.data, "Dataset CSV")->required();
  l->add_option("--out", learn.out, "Output model JSON")->required();
  l->add_option("--mi-threshold", learn.mi_threshold, "Minimum mutual information (nats) for an edge");
  l->add_option("--max-parents", learn.max_parents, "Maximum parents per node");
  l->add_option("--alpha", learn.alpha, "Pseudo-count for table smoothing");

  QueryOptions query;
  auto* q = app.add_subcommand("query", "Posterior probability of one node");
  q->add_option("--model", query.model, "Model JSON")->required();
  q->add_option("--target", query.target, "Target node, e.g. B4 or G1")->required();
  q->add_option("--evidence", query.evidence, "Observed values, e.g. LOL=1 (repeatable)");
  q->add_flag("--json", query.as_json, "Print JSON instead of text");

  ReportOptions report;
  auto* r = app.add_subcommand("report", "Load-bus and component rankings");
  r->add_option("--model", report.model, "Model JSON")->required();
  r->add_option("--rank-bus", report.rank_buses, "Load bus whose components are ranked (repeatable)");
  r->add_flag("--all-components", report.all_components, "Rank every component node, not only the bus parents");
  r->add_option("--format", report.format, "json or text");
  r->add_option("--out", report.out, "Write the report here instead of stdout");

  std::string validate_case_name;
  auto* v = app.add_subcommand("validate", "Check a case file against the model invariants");
  v->add_option("--case", validate_case_name, "Builtin case or case file path")->required();

  std::vector<std::string> argv_store{"relbn"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (s->parsed()) return cmd_sample(sample, out);
    if (l->parsed()) return cmd_learn(learn, out);
    if (q->parsed()) return cmd_query(query, out);
    if (r->parsed()) return cmd_report(report, out);
    if (v->parsed()) return cmd_validate(validate_case_name, out);
  } catch (const Failure& e) {
    err << "error: " << e.what() << '\n';
    return e.code;
  }
  return kConfigError;
}

}  // namespace relbn::cli
