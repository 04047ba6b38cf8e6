#include "relbn/inference.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>

namespace relbn {

namespace {

// Table over binary variables; bit p of the index is the value of vars[p].
struct Factor {
  std::vector<std::size_t> vars;  // ascending node positions
  std::vector<double> table;
};

std::size_t bit_of(std::size_t index, std::size_t pos) { return (index >> pos) & 1u; }

Factor cpt_factor(const BayesNet& net, std::size_t node) {
  const auto& parents = net.dag.parents[node];
  std::vector<std::size_t> parent_pos;
  for (const auto& p : parents) parent_pos.push_back(net.dag.find(p));
  Factor f;
  f.vars = parent_pos;
  f.vars.push_back(node);
  std::sort(f.vars.begin(), f.vars.end());
  auto where = [&](std::size_t v) {
    return static_cast<std::size_t>(std::find(f.vars.begin(), f.vars.end(), v) - f.vars.begin());
  };
  const auto self = where(node);
  std::vector<std::size_t> parent_slot;
  for (auto p : parent_pos) parent_slot.push_back(where(p));
  const auto& table = net.cpts[node].p_true;
  f.table.resize(std::size_t{1} << f.vars.size());
  for (std::size_t a = 0; a < f.table.size(); ++a) {
    std::size_t row = 0;
    for (auto slot : parent_slot) row = (row << 1) | bit_of(a, slot);
    const double p1 = table[row];
    f.table[a] = bit_of(a, self) ? p1 : 1.0 - p1;
  }
  return f;
}

Factor restrict(const Factor& f, std::size_t var, int value) {
  const auto it = std::find(f.vars.begin(), f.vars.end(), var);
  if (it == f.vars.end()) return f;
  const auto pos = static_cast<std::size_t>(it - f.vars.begin());
  Factor out;
  out.vars = f.vars;
  out.vars.erase(out.vars.begin() + static_cast<std::ptrdiff_t>(pos));
  out.table.resize(std::size_t{1} << out.vars.size());
  for (std::size_t a = 0; a < out.table.size(); ++a) {
    const std::size_t low = a & ((std::size_t{1} << pos) - 1);
    const std::size_t high = (a >> pos) << (pos + 1);
    out.table[a] = f.table[high | (static_cast<std::size_t>(value) << pos) | low];
  }
  return out;
}

Factor multiply(const std::vector<const Factor*>& factors) {
  Factor out;
  for (const auto* f : factors) out.vars.insert(out.vars.end(), f->vars.begin(), f->vars.end());
  std::sort(out.vars.begin(), out.vars.end());
  out.vars.erase(std::unique(out.vars.begin(), out.vars.end()), out.vars.end());
  // For each input factor, the union slot of each of its variables.
  std::vector<std::vector<std::size_t>> slots;
  for (const auto* f : factors) {
    std::vector<std::size_t> s;
    for (auto v : f->vars)
      s.push_back(static_cast<std::size_t>(std::lower_bound(out.vars.begin(), out.vars.end(), v) - out.vars.begin()));
    slots.push_back(std::move(s));
  }
  out.table.assign(std::size_t{1} << out.vars.size(), 1.0);
  for (std::size_t a = 0; a < out.table.size(); ++a) {
    double value = 1.0;
    for (std::size_t k = 0; k < factors.size(); ++k) {
      std::size_t idx = 0;
      for (std::size_t p = 0; p < slots[k].size(); ++p) idx |= bit_of(a, slots[k][p]) << p;
      value *= factors[k]->table[idx];
    }
    out.table[a] = value;
  }
  return out;
}

Factor sum_out(const Factor& f, std::size_t var) {
  const auto pos = static_cast<std::size_t>(std::find(f.vars.begin(), f.vars.end(), var) - f.vars.begin());
  Factor out;
  out.vars = f.vars;
  out.vars.erase(out.vars.begin() + static_cast<std::ptrdiff_t>(pos));
  out.table.assign(std::size_t{1} << out.vars.size(), 0.0);
  for (std::size_t a = 0; a < out.table.size(); ++a) {
    const std::size_t low = a & ((std::size_t{1} << pos) - 1);
    const std::size_t high = (a >> pos) << (pos + 1);
    out.table[a] = f.table[high | low] + f.table[high | (std::size_t{1} << pos) | low];
  }
  return out;
}

std::size_t require_node(const BayesNet& net, NodeId node) {
  const auto i = net.dag.find(node);
  if (i == net.dag.nodes.size()) throw std::out_of_range("node " + node.name() + " is not in the network");
  return i;
}

// Eliminates every relevant variable except `keep`; returns the product of the
// remaining factors (a factor over `keep`, or a scalar when keep is absent).
Factor eliminate(const BayesNet& net, std::optional<std::size_t> keep, const Evidence& evidence) {
  const std::size_t n = net.dag.nodes.size();
  std::vector<int> observed(n, -1);
  for (const auto& [node, value] : evidence.assignments) {
    if (value != 0 && value != 1) throw std::invalid_argument("evidence values must be 0 or 1");
    observed[require_node(net, node)] = value;
  }

  // Only ancestors of the query and evidence nodes matter; the rest sum to one.
  std::vector<bool> relevant(n, false);
  std::vector<std::size_t> stack;
  if (keep) stack.push_back(*keep);
  for (std::size_t i = 0; i < n; ++i)
    if (observed[i] >= 0) stack.push_back(i);
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    if (relevant[v]) continue;
    relevant[v] = true;
    for (const auto& p : net.dag.parents[v]) stack.push_back(net.dag.find(p));
  }

  std::vector<Factor> factors;
  for (std::size_t i = 0; i < n; ++i) {
    if (!relevant[i]) continue;
    Factor f = cpt_factor(net, i);
    for (std::size_t k = 0; k < f.vars.size();) {
      const auto v = f.vars[k];
      if (observed[v] >= 0) {
        f = restrict(f, v, observed[v]);
      } else {
        ++k;
      }
    }
    factors.push_back(std::move(f));
  }

  std::set<std::size_t> pending;
  for (std::size_t i = 0; i < n; ++i)
    if (relevant[i] && observed[i] < 0 && (!keep || i != *keep)) pending.insert(i);

  while (!pending.empty()) {
    // Min-degree; node positions follow (kind, index), so the smallest wins ties.
    std::size_t best = *pending.begin(), best_degree = SIZE_MAX;
    for (auto v : pending) {
      std::set<std::size_t> neighbours;
      for (const auto& f : factors)
        if (std::binary_search(f.vars.begin(), f.vars.end(), v)) neighbours.insert(f.vars.begin(), f.vars.end());
      const std::size_t degree = neighbours.empty() ? 0 : neighbours.size() - 1;
      if (degree < best_degree) {
        best_degree = degree;
        best = v;
      }
    }
    pending.erase(best);
    std::vector<const Factor*> involved;
    std::vector<Factor> rest;
    for (const auto& f : factors)
      if (std::binary_search(f.vars.begin(), f.vars.end(), best)) involved.push_back(&f);
    Factor merged = sum_out(multiply(involved), best);
    for (auto& f : factors)
      if (!std::binary_search(f.vars.begin(), f.vars.end(), best)) rest.push_back(std::move(f));
    rest.push_back(std::move(merged));
    factors = std::move(rest);
  }

  std::vector<const Factor*> all;
  for (const auto& f : factors) all.push_back(&f);
  if (all.empty()) return Factor{{}, {1.0}};
  return multiply(all);
}

}  // namespace

double joint_probability(const BayesNet& net, const std::map<NodeId, int>& assignment) {
  for (const auto& [node, value] : assignment) {
    require_node(net, node);
    if (value != 0 && value != 1) throw std::invalid_argument("assignment values must be 0 or 1");
  }
  double p = 1.0;
  for (std::size_t i = 0; i < net.dag.nodes.size(); ++i) {
    auto value_of = [&](NodeId node) {
      auto it = assignment.find(node);
      if (it == assignment.end()) throw std::invalid_argument("assignment does not cover node " + node.name());
      return it->second;
    };
    std::size_t row = 0;
    for (const auto& parent : net.dag.parents[i]) row = (row << 1) | static_cast<std::size_t>(value_of(parent));
    const double p1 = net.cpts[i].p_true[row];
    p *= value_of(net.dag.nodes[i]) ? p1 : 1.0 - p1;
  }
  return p;
}

Distribution posterior(const BayesNet& net, NodeId target, const Evidence& evidence) {
  const auto t = require_node(net, target);
  if (evidence.assignments.contains(target)) throw std::invalid_argument("target " + target.name() + " is observed");
  const Factor f = eliminate(net, t, evidence);
  const double total = f.table[0] + f.table[1];
  if (!(total > 0.0)) throw ContradictoryEvidence("evidence has zero probability under the model");
  return {f.table[0] / total, f.table[1] / total};
}

double evidence_probability(const BayesNet& net, const Evidence& evidence) {
  return eliminate(net, std::nullopt, evidence).table[0];
}

namespace {

void sort_entries(std::vector<RankingEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const RankingEntry& a, const RankingEntry& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return a.node < b.node;
  });
}

}  // namespace

BusNotInModelError::BusNotInModelError(int bus)
    : std::runtime_error("bus " + std::to_string(bus) +
                         " was pruned from the model (its MI with LOL fell below the threshold)"),
      bus_(bus) {}

RankingReport rank_components(const BayesNet& net, int bus, bool all_components) {
  const NodeId b{NodeKind::B, bus};
  if (!net.dag.contains(b)) throw BusNotInModelError(bus);
  RankingReport report;
  report.query = "P(component=1 | " + b.name() + "=1)";
  report.evidence.assignments[b] = 1;
  std::vector<NodeId> candidates;
  if (all_components) {
    for (const auto& node : net.dag.nodes)
      if (node.kind == NodeKind::G || node.kind == NodeKind::L) candidates.push_back(node);
  } else {
    candidates = net.dag.parents_of(b);
  }
  for (const auto& c : candidates) report.entries.push_back({c, posterior(net, c, report.evidence).p1});
  sort_entries(report.entries);
  return report;
}

RankingReport rank_load_buses(const BayesNet& net) {
  RankingReport report;
  report.query = "P(B=1 | LOL=1)";
  report.evidence.assignments[{NodeKind::LOL, 0}] = 1;
  require_node(net, {NodeKind::LOL, 0});
  for (const auto& node : net.dag.nodes)
    if (node.kind == NodeKind::B) report.entries.push_back({node, posterior(net, node, report.evidence).p1});
  sort_entries(report.entries);
  return report;
}

RankingReport rank_load_buses_marginal(const BayesNet& net) {
  RankingReport report;
  report.query = "P(B=1)";
  for (const auto& node : net.dag.nodes)
    if (node.kind == NodeKind::B) report.entries.push_back({node, posterior(net, node, {}).p1});
  sort_entries(report.entries);
  return report;
}

std::string RankingReport::to_json() const {
  nlohmann::json doc;
  doc["query"] = query;
  doc["evidence"] = nlohmann::json::object();
  for (const auto& [node, value] : evidence.assignments) doc["evidence"][node.name()] = value;
  doc["entries"] = nlohmann::json::array();
  for (const auto& e : entries) doc["entries"].push_back({{"node", e.node.name()}, {"p", e.probability}});
  return doc.dump(2);
}

std::string RankingReport::to_text() const {
  std::ostringstream os;
  os << query << '\n';
  std::size_t width = 4;
  for (const auto& e : entries) width = std::max(width, e.node.name().size());
  os << std::left << std::setw(static_cast<int>(width)) << "node" << "  " << "probability" << '\n';
  for (const auto& e : entries) {
    char value[32];
    std::snprintf(value, sizeof value, "%.6f", e.probability);
    os << std::left << std::setw(static_cast<int>(width)) << e.node.name() << "  " << value << '\n';
  }
  return os.str();
}

}  // namespace relbn
