#include "relbn/bayes_net.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

namespace relbn {

using json = nlohmann::json;

std::string NodeId::name() const {
  switch (kind) {
    case NodeKind::G: return "G" + std::to_string(index);
    case NodeKind::L: return "L" + std::to_string(index);
    case NodeKind::B: return "B" + std::to_string(index);
    case NodeKind::LOL: return "LOL";
  }
  return {};
}

NodeId NodeId::parse(std::string_view text) {
  if (text == "LOL") return {NodeKind::LOL, 0};
  if (text.size() < 2) throw std::invalid_argument("bad node name '" + std::string(text) + "'");
  NodeKind kind;
  switch (text[0]) {
    case 'G': kind = NodeKind::G; break;
    case 'L': kind = NodeKind::L; break;
    case 'B': kind = NodeKind::B; break;
    default: throw std::invalid_argument("bad node name '" + std::string(text) + "'");
  }
  int index = 0;
  auto [ptr, ec] = std::from_chars(text.data() + 1, text.data() + text.size(), index);
  if (ec != std::errc{} || ptr != text.data() + text.size() || index <= 0)
    throw std::invalid_argument("bad node name '" + std::string(text) + "'");
  return {kind, index};
}

std::size_t Dag::find(NodeId node) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), node);
  if (it != nodes.end() && *it == node) return static_cast<std::size_t>(it - nodes.begin());
  return nodes.size();
}

const std::vector<NodeId>& Dag::parents_of(NodeId node) const {
  const auto i = find(node);
  if (i == nodes.size()) throw std::out_of_range("node " + node.name() + " is not in the network");
  return parents[i];
}

std::size_t Dag::edge_count() const {
  std::size_t edges = 0;
  for (const auto& p : parents) edges += p.size();
  return edges;
}

const Cpt& BayesNet::cpt(NodeId node) const {
  const auto i = dag.find(node);
  if (i == dag.nodes.size()) throw std::out_of_range("node " + node.name() + " is not in the network");
  return cpts[i];
}

void BayesNet::canonicalize() {
  if (dag.parents.size() != dag.nodes.size() || cpts.size() != dag.nodes.size())
    throw std::invalid_argument("network nodes, parents and tables differ in length");
  std::vector<std::size_t> order(dag.nodes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return dag.nodes[a] < dag.nodes[b]; });
  Dag sorted;
  std::vector<Cpt> tables;
  for (auto i : order) {
    if (!std::is_sorted(dag.parents[i].begin(), dag.parents[i].end()))
      throw std::invalid_argument("parents of " + dag.nodes[i].name() + " are not sorted");
    if (cpts[i].p_true.size() != (std::size_t{1} << dag.parents[i].size()))
      throw std::invalid_argument("table of " + dag.nodes[i].name() + " has the wrong size");
    sorted.nodes.push_back(dag.nodes[i]);
    sorted.parents.push_back(dag.parents[i]);
    tables.push_back(cpts[i]);
  }
  for (std::size_t i = 1; i < sorted.nodes.size(); ++i)
    if (sorted.nodes[i] == sorted.nodes[i - 1]) throw std::invalid_argument("duplicate node " + sorted.nodes[i].name());
  for (const auto& ps : sorted.parents)
    for (const auto& p : ps)
      if (sorted.find(p) == sorted.nodes.size()) throw std::invalid_argument("parent " + p.name() + " is not a node");
  // Kahn's algorithm; anything left over sits on a cycle.
  std::vector<std::size_t> pending(sorted.nodes.size());
  std::vector<std::vector<std::size_t>> children(sorted.nodes.size());
  for (std::size_t i = 0; i < sorted.nodes.size(); ++i) {
    pending[i] = sorted.parents[i].size();
    for (const auto& p : sorted.parents[i]) children[sorted.find(p)].push_back(i);
  }
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < pending.size(); ++i)
    if (pending[i] == 0) ready.push_back(i);
  std::size_t visited = 0;
  while (!ready.empty()) {
    const auto i = ready.back();
    ready.pop_back();
    ++visited;
    for (auto c : children[i])
      if (--pending[c] == 0) ready.push_back(c);
  }
  if (visited != sorted.nodes.size()) throw std::invalid_argument("network graph has a cycle");
  dag = std::move(sorted);
  cpts = std::move(tables);
}

std::vector<std::uint8_t> column(const SampleSet& samples, NodeId node) {
  auto position = [&](const std::vector<int>& ids) {
    auto it = std::find(ids.begin(), ids.end(), node.index);
    if (it == ids.end()) throw std::out_of_range("no column for node " + node.name());
    return static_cast<std::size_t>(it - ids.begin());
  };
  std::vector<std::uint8_t> out;
  out.reserve(samples.size());
  switch (node.kind) {
    case NodeKind::G: {
      const auto k = position(samples.generator_ids);
      for (const auto& r : samples.records) out.push_back(r.g_bits[k]);
      break;
    }
    case NodeKind::L: {
      const auto k = position(samples.line_ids);
      for (const auto& r : samples.records) out.push_back(r.l_bits[k]);
      break;
    }
    case NodeKind::B: {
      const auto k = position(samples.load_buses);
      for (const auto& r : samples.records) out.push_back(r.b_bits[k]);
      break;
    }
    case NodeKind::LOL:
      for (const auto& r : samples.records) out.push_back(r.lol);
      break;
  }
  return out;
}

std::vector<double> weights(const SampleSet& samples) {
  std::vector<double> w;
  w.reserve(samples.size());
  for (const auto& r : samples.records) w.push_back(r.weight);
  return w;
}

double mutual_information(std::span<const std::uint8_t> x, std::span<const std::uint8_t> y,
                          std::span<const double> w) {
  if (x.size() != y.size() || x.size() != w.size())
    throw std::invalid_argument("mutual_information: columns differ in length");
  if (x.empty()) throw std::invalid_argument("mutual_information: empty input");
  double joint[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  for (std::size_t i = 0; i < x.size(); ++i) joint[x[i] != 0][y[i] != 0] += w[i];
  // Every expression below is invariant under swapping x and y, so the result
  // is exactly symmetric.
  const double total = (joint[0][0] + joint[1][1]) + (joint[0][1] + joint[1][0]);
  if (!(total > 0.0)) throw std::invalid_argument("mutual_information: weights must be positive");
  const double px[2] = {joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]};
  const double py[2] = {joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]};
  auto term = [&](int a, int b) {
    const double n = joint[a][b];
    if (n <= 0.0) return 0.0;
    return n / total * std::log(n * total / (px[a] * py[b]));
  };
  const double mi = (term(0, 0) + term(1, 1)) + (term(0, 1) + term(1, 0));
  return std::max(mi, 0.0);
}

void LearnerConfig::validate() const {
  if (!(mi_threshold > 0.0)) throw std::invalid_argument("mi_threshold must be positive");
  if (max_parents < 1) throw std::invalid_argument("max_parents must be at least 1");
}

AllBusesPrunedError::AllBusesPrunedError(double threshold, double best_mi)
    : std::runtime_error("every load bus was pruned: largest MI(B, LOL) = " + std::to_string(best_mi) +
                         " nats is below the threshold " + std::to_string(threshold)),
      threshold_(threshold),
      best_mi_(best_mi) {}

namespace {

struct Scored {
  NodeId node;
  double mi;
};

// Highest MI first, then (kind, index); keeps at most `limit`.
std::vector<NodeId> top_by_mi(std::vector<Scored> candidates, std::size_t limit) {
  std::sort(candidates.begin(), candidates.end(), [](const Scored& a, const Scored& b) {
    if (a.mi != b.mi) return a.mi > b.mi;
    return a.node < b.node;
  });
  if (candidates.size() > limit) candidates.resize(limit);
  std::vector<NodeId> kept;
  for (const auto& c : candidates) kept.push_back(c.node);
  std::sort(kept.begin(), kept.end());
  return kept;
}

}  // namespace

Dag learn_structure(const SampleSet& samples, const LearnerConfig& config) {
  config.validate();
  if (samples.empty()) throw std::invalid_argument("learn_structure: empty sample set");
  const auto w = weights(samples);
  const auto lol = column(samples, {NodeKind::LOL, 0});

  std::vector<Scored> bus_scores;
  double best = 0.0;
  for (int bus : samples.load_buses) {
    const NodeId b{NodeKind::B, bus};
    const double mi = mutual_information(column(samples, b), lol, w);
    best = std::max(best, mi);
    if (mi >= config.mi_threshold) bus_scores.push_back({b, mi});
  }
  if (bus_scores.empty()) throw AllBusesPrunedError(config.mi_threshold, best);
  const auto retained = top_by_mi(bus_scores, config.max_parents);

  std::vector<NodeId> components;
  for (int id : samples.generator_ids) components.push_back({NodeKind::G, id});
  for (int id : samples.line_ids) components.push_back({NodeKind::L, id});
  std::vector<std::vector<std::uint8_t>> component_columns;
  for (const auto& c : components) component_columns.push_back(column(samples, c));

  Dag dag;
  std::vector<std::pair<NodeId, std::vector<NodeId>>> entries;
  std::vector<NodeId> used_components;
  for (const auto& b : retained) {
    const auto b_col = column(samples, b);
    std::vector<Scored> scores;
    for (std::size_t k = 0; k < components.size(); ++k) {
      const double mi = mutual_information(component_columns[k], b_col, w);
      if (mi >= config.mi_threshold) scores.push_back({components[k], mi});
    }
    auto parents = top_by_mi(std::move(scores), config.max_parents);
    used_components.insert(used_components.end(), parents.begin(), parents.end());
    entries.emplace_back(b, std::move(parents));
  }
  entries.emplace_back(NodeId{NodeKind::LOL, 0}, retained);
  std::sort(used_components.begin(), used_components.end());
  used_components.erase(std::unique(used_components.begin(), used_components.end()), used_components.end());
  for (const auto& c : used_components) entries.emplace_back(c, std::vector<NodeId>{});
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [node, parents] : entries) {
    dag.nodes.push_back(node);
    dag.parents.push_back(std::move(parents));
  }
  return dag;
}

BayesNet fit_parameters(const Dag& dag, const SampleSet& samples, double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("fit_parameters: alpha must be non-negative");
  BayesNet net;
  net.dag = dag;
  net.fingerprint = samples.fingerprint;
  auto w = weights(samples);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (total > 0.0)
    for (auto& x : w) x *= static_cast<double>(w.size()) / total;

  for (std::size_t i = 0; i < dag.nodes.size(); ++i) {
    const auto& parents = dag.parents[i];
    const std::size_t rows = std::size_t{1} << parents.size();
    std::vector<double> hit(rows, 0.0), seen(rows, 0.0);
    const auto child = column(samples, dag.nodes[i]);
    std::vector<std::vector<std::uint8_t>> parent_cols;
    for (const auto& p : parents) parent_cols.push_back(column(samples, p));
    for (std::size_t r = 0; r < samples.size(); ++r) {
      std::size_t idx = 0;
      for (const auto& col : parent_cols) idx = (idx << 1) | col[r];
      seen[idx] += w[r];
      if (child[r]) hit[idx] += w[r];
    }
    Cpt table;
    table.p_true.resize(rows);
    for (std::size_t k = 0; k < rows; ++k) {
      const double denom = seen[k] + 2.0 * alpha;
      table.p_true[k] = denom > 0.0 ? (hit[k] + alpha) / denom : 0.5;
    }
    net.cpts.push_back(std::move(table));
  }
  net.canonicalize();
  return net;
}

std::string to_json(const BayesNet& net) {
  json doc;
  doc["fingerprint"] = {{"name", net.fingerprint.name}, {"checksum", net.fingerprint.checksum}};
  doc["nodes"] = json::array();
  json parents = json::object(), cpts = json::object();
  for (std::size_t i = 0; i < net.dag.nodes.size(); ++i) {
    const auto& node = net.dag.nodes[i];
    const auto name = node.name();
    static constexpr const char* kinds[] = {"G", "L", "B", "LOL"};
    doc["nodes"].push_back({{"kind", kinds[static_cast<int>(node.kind)]}, {"index", node.index}, {"name", name}});
    json list = json::array();
    for (const auto& p : net.dag.parents[i]) list.push_back(p.name());
    parents[name] = std::move(list);
    cpts[name] = net.cpts[i].p_true;
  }
  doc["parents"] = std::move(parents);
  doc["cpts"] = std::move(cpts);
  doc["metadata"] = net.metadata;
  return doc.dump(2) + "\n";
}

BayesNet bayes_net_from_json(std::string_view text) {
  BayesNet net;
  try {
    const auto doc = json::parse(text.begin(), text.end());
    net.fingerprint = {doc.at("fingerprint").at("name").get<std::string>(),
                       doc.at("fingerprint").at("checksum").get<std::string>()};
    for (const auto& n : doc.at("nodes")) {
      const auto kind = n.at("kind").get<std::string>();
      const NodeId id = kind == "LOL" ? NodeId{NodeKind::LOL, 0} : NodeId::parse(kind + std::to_string(n.at("index").get<int>()));
      net.dag.nodes.push_back(id);
      std::vector<NodeId> ps;
      for (const auto& p : doc.at("parents").at(id.name())) ps.push_back(NodeId::parse(p.get<std::string>()));
      net.dag.parents.push_back(std::move(ps));
      net.cpts.push_back({doc.at("cpts").at(id.name()).get<std::vector<double>>()});
    }
    if (doc.contains("metadata")) net.metadata = doc["metadata"].get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed model: ") + e.what());
  }
  net.canonicalize();
  for (const auto& table : net.cpts)
    for (double p : table.p_true)
      if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("model table entry outside [0,1]");
  return net;
}

}  // namespace relbn
