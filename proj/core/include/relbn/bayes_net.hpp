#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "relbn/dataset.hpp"
#include "relbn/grid.hpp"

namespace relbn {

/// Declaration order is the (kind, index) ordering used for every tie-break.
enum class NodeKind : std::uint8_t { G, L, B, LOL };

struct NodeId {
  NodeKind kind = NodeKind::G;
  int index = 0;  // component id for G/L, bus id for B, 0 for LOL

  auto operator<=>(const NodeId&) const = default;

  /// "G3", "L5", "B4", "LOL".
  std::string name() const;
  /// Inverse of name(); throws std::invalid_argument.
  static NodeId parse(std::string_view text);
};

/// Layered structure: G/L -> B -> LOL. Nodes are kept sorted and each parent
/// list is sorted, so storage order is canonical.
struct Dag {
  std::vector<NodeId> nodes;
  std::vector<std::vector<NodeId>> parents;

  /// Position of `node` in `nodes`, or nodes.size() when absent.
  std::size_t find(NodeId node) const;
  bool contains(NodeId node) const { return find(node) != nodes.size(); }
  const std::vector<NodeId>& parents_of(NodeId node) const;
  std::size_t edge_count() const;

  bool operator==(const Dag&) const = default;
};

/// P(node = 1 | parents) for every parent assignment. Entry index reads the
/// parent bits with the first parent as the most significant bit.
struct Cpt {
  std::vector<double> p_true;

  bool operator==(const Cpt&) const = default;
};

struct BayesNet {
  Dag dag;
  std::vector<Cpt> cpts;  // aligned with dag.nodes
  CaseFingerprint fingerprint;
  /// Training provenance (sampler and learner settings, LOLP estimate).
  std::map<std::string, std::string> metadata;

  const Cpt& cpt(NodeId node) const;
  /// Sorts nodes (and their tables) into canonical order; validates shape.
  void canonicalize();

  bool operator==(const BayesNet&) const = default;
};

/// Column of a sample set for `node`, plus the record weights.
std::vector<std::uint8_t> column(const SampleSet& samples, NodeId node);
std::vector<double> weights(const SampleSet& samples);

/// Weighted empirical mutual information (natural log) of two binary columns.
double mutual_information(std::span<const std::uint8_t> x, std::span<const std::uint8_t> y,
                          std::span<const double> w);

struct LearnerConfig {
  double mi_threshold = 1e-3;
  std::size_t max_parents = 8;

  void validate() const;
};

class AllBusesPrunedError : public std::runtime_error {
 public:
  explicit AllBusesPrunedError(double threshold, double best_mi);
  double threshold() const { return threshold_; }
  double best_mi() const { return best_mi_; }

 private:
  double threshold_;
  double best_mi_;
};

/// Two-stage mutual-information structure learning over the layer schema.
Dag learn_structure(const SampleSet& samples, const LearnerConfig& config);

/// Weighted maximum-likelihood tables with symmetric pseudo-count `alpha`.
/// Weights are rescaled to mean one, so `alpha` counts in records.
BayesNet fit_parameters(const Dag& dag, const SampleSet& samples, double alpha = 1.0);

std::string to_json(const BayesNet& net);
BayesNet bayes_net_from_json(std::string_view text);

}  // namespace relbn
