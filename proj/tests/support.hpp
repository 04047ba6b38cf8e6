#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "relbn/bayes_net.hpp"
#include "relbn/grid.hpp"

namespace relbn::test {

inline GridCase two_bus_case(double gen_mw = 100.0, double load_mw = 80.0, double rating = 50.0) {
  GridCase g;
  g.name = "two-bus";
  g.buses = {{1, true}, {2, false}};
  g.generators = {{1, 1, 0.0, gen_mw, 0.05}};
  g.lines = {{1, 1, 2, 0.1, rating, 0.01}};
  g.loads = {{2, load_mw, 1.0}};
  return g;
}

/// Equal-reactance triangle 1-2, 1-3, 3-2.
inline GridCase triangle_case() {
  GridCase g;
  g.name = "triangle";
  g.buses = {{1, false}, {2, true}, {3, false}};
  g.generators = {{1, 2, 0.0, 200.0, 0.0}};
  g.lines = {{1, 1, 2, 0.1, 100.0, 0.0}, {2, 1, 3, 0.1, 100.0, 0.0}, {3, 3, 2, 0.1, 100.0, 0.0}};
  g.loads = {{1, 50.0, 1.0}};
  return g;
}

/// Random network over the G/L -> B -> LOL layer schema with `components`
/// component nodes and `buses` B nodes; every table entry is drawn in (0, 1).
inline BayesNet random_layered_net(std::mt19937_64& rng, int components, int buses, int max_parents = 3) {
  std::uniform_real_distribution<double> prob(0.02, 0.98);
  BayesNet net;
  std::vector<NodeId> comps;
  for (int i = 1; i <= components; ++i) comps.push_back({i % 2 ? NodeKind::G : NodeKind::L, i});
  for (auto c : comps) {
    net.dag.nodes.push_back(c);
    net.dag.parents.push_back({});
    net.cpts.push_back({{prob(rng)}});
  }
  std::vector<NodeId> bs;
  for (int b = 1; b <= buses; ++b) {
    NodeId node{NodeKind::B, b};
    bs.push_back(node);
    std::vector<NodeId> parents;
    for (auto c : comps)
      if (static_cast<int>(parents.size()) < max_parents && std::bernoulli_distribution(0.4)(rng)) parents.push_back(c);
    std::sort(parents.begin(), parents.end());
    Cpt table;
    for (std::size_t r = 0; r < (std::size_t{1} << parents.size()); ++r) table.p_true.push_back(prob(rng));
    net.dag.nodes.push_back(node);
    net.dag.parents.push_back(parents);
    net.cpts.push_back(table);
  }
  Cpt lol;
  for (std::size_t r = 0; r < (std::size_t{1} << bs.size()); ++r) lol.p_true.push_back(prob(rng));
  net.dag.nodes.push_back({NodeKind::LOL, 0});
  net.dag.parents.push_back(bs);
  net.cpts.push_back(lol);
  net.canonicalize();
  return net;
}

/// Brute-force P(target = 1 | evidence) by summing the full joint.
inline double enumerate_posterior(const BayesNet& net, NodeId target, const std::map<NodeId, int>& evidence) {
  const auto n = net.dag.nodes.size();
  double num = 0.0, den = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    std::map<NodeId, int> a;
    bool consistent = true;
    for (std::size_t i = 0; i < n; ++i) {
      const int v = static_cast<int>((mask >> i) & 1U);
      a[net.dag.nodes[i]] = v;
      auto it = evidence.find(net.dag.nodes[i]);
      if (it != evidence.end() && it->second != v) consistent = false;
    }
    if (!consistent) continue;
    double p = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t row = 0;
      for (const auto& parent : net.dag.parents[i]) row = (row << 1) | static_cast<std::size_t>(a[parent]);
      const double p1 = net.cpts[i].p_true[row];
      p *= a[net.dag.nodes[i]] ? p1 : 1.0 - p1;
    }
    den += p;
    if (a[target]) num += p;
  }
  return num / den;
}

}  // namespace relbn::test
