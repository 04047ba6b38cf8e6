#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "relbn/bayes_net.hpp"

namespace relbn {

/// Observed node values (0 or 1).
struct Evidence {
  std::map<NodeId, int> assignments;

  Evidence() = default;
  Evidence(std::initializer_list<std::pair<const NodeId, int>> init) : assignments(init) {}
};

class ContradictoryEvidence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Product of table entries for a complete assignment.
double joint_probability(const BayesNet& net, const std::map<NodeId, int>& assignment);

struct Distribution {
  double p0 = 0.0;
  double p1 = 0.0;
};

/// Exact P(target | evidence) by variable elimination (min-degree order,
/// ties by (kind, index)). Throws ContradictoryEvidence when P(evidence) = 0.
Distribution posterior(const BayesNet& net, NodeId target, const Evidence& evidence);

/// P(evidence) under the network.
double evidence_probability(const BayesNet& net, const Evidence& evidence);

struct RankingEntry {
  NodeId node;
  double probability = 0.0;

  bool operator==(const RankingEntry&) const = default;
};

/// Entries sorted by probability descending, ties by (kind, index).
struct RankingReport {
  std::string query;
  Evidence evidence;
  std::vector<RankingEntry> entries;

  std::string to_json() const;
  std::string to_text() const;
};

class BusNotInModelError : public std::runtime_error {
 public:
  explicit BusNotInModelError(int bus);
  int bus() const { return bus_; }

 private:
  int bus_;
};

/// P(component down | B_bus = 1) for the G/L parents of B_bus, or for every
/// G/L node in the network when `all_components` is set.
RankingReport rank_components(const BayesNet& net, int bus, bool all_components = false);

/// P(B = 1 | LOL = 1) for every B node in the network.
RankingReport rank_load_buses(const BayesNet& net);

/// Marginal P(B = 1) for every B node, without evidence.
RankingReport rank_load_buses_marginal(const BayesNet& net);

}  // namespace relbn
