#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "relbn/inference.hpp"
#include "support.hpp"

using namespace relbn;

namespace {

const NodeId G1{NodeKind::G, 1}, L5{NodeKind::L, 5}, B4{NodeKind::B, 4}, B2{NodeKind::B, 2}, LOL{NodeKind::LOL, 0};

BayesNet chain(double p_parent, double p_child_given_0, double p_child_given_1) {
  BayesNet net;
  net.dag.nodes = {G1, B4};
  net.dag.parents = {{}, {G1}};
  net.cpts = {{{p_parent}}, {{p_child_given_0, p_child_given_1}}};
  net.canonicalize();
  return net;
}

}  // namespace

TEST_CASE("joint probability by the product rule") {
  BayesNet root;
  root.dag.nodes = {G1};
  root.dag.parents = {{}};
  root.cpts = {{{0.3}}};
  CHECK(joint_probability(root, {{G1, 1}}) == doctest::Approx(0.3));
  CHECK(joint_probability(root, {{G1, 0}}) == doctest::Approx(0.7));

  const auto net = chain(0.2, 0.1, 0.5);
  CHECK(joint_probability(net, {{G1, 1}, {B4, 1}}) == doctest::Approx(0.1));
  CHECK_THROWS_AS(joint_probability(net, {{G1, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(joint_probability(net, {{G1, 1}, {B4, 2}}), std::invalid_argument);
}

TEST_CASE("posterior on a two-node chain") {
  const auto net = chain(0.2, 0.1, 0.5);
  // No evidence: the marginal.
  CHECK(posterior(net, G1, {}).p1 == doctest::Approx(0.2));
  CHECK(posterior(net, B4, {}).p1 == doctest::Approx(0.2 * 0.5 + 0.8 * 0.1));
  // Bayes: 0.1 / 0.18.
  const auto d = posterior(net, G1, {{B4, 1}});
  CHECK(d.p1 == doctest::Approx(0.1 / 0.18));
  CHECK(std::abs(d.p0 + d.p1 - 1.0) < 1e-12);
  CHECK(evidence_probability(net, {{B4, 1}}) == doctest::Approx(0.18));
}

TEST_CASE("zero-probability evidence is contradictory") {
  const auto net = chain(0.0, 0.0, 1.0);
  CHECK_THROWS_AS(posterior(net, G1, {{B4, 1}}), ContradictoryEvidence);
  CHECK_THROWS_AS(posterior(net, G1, {{G1, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(posterior(net, L5, {}), std::out_of_range);
}

TEST_CASE("variable elimination equals enumeration on random layered networks") {
  std::mt19937_64 rng(31337);
  for (int trial = 0; trial < 60; ++trial) {
    const int comps = std::uniform_int_distribution<int>(1, 7)(rng);
    const int buses = std::uniform_int_distribution<int>(1, 3)(rng);
    const auto net = test::random_layered_net(rng, comps, buses);
    CAPTURE(trial);
    std::map<NodeId, int> all;
    double total = 0.0;
    const auto n = net.dag.nodes.size();
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
      for (std::size_t i = 0; i < n; ++i) all[net.dag.nodes[i]] = static_cast<int>(mask >> i & 1U);
      total += joint_probability(net, all);
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
    for (const auto& target : net.dag.nodes) {
      if (target == LOL) continue;
      const auto d = posterior(net, target, {{LOL, 1}});
      CHECK(std::abs(d.p1 - test::enumerate_posterior(net, target, {{LOL, 1}})) < 1e-9);
      CHECK(std::abs(d.p0 + d.p1 - 1.0) < 1e-12);
    }
    const auto b = net.dag.nodes[static_cast<std::size_t>(comps)];
    for (const auto& target : net.dag.nodes) {
      if (target == b) continue;
      CHECK(std::abs(posterior(net, target, {{b, 1}}).p1 - test::enumerate_posterior(net, target, {{b, 1}})) < 1e-9);
    }
  }
}

TEST_CASE("component ranking on a two-node chain") {
  const auto net = chain(0.2, 0.1, 0.5);
  const auto r = rank_components(net, 4);
  REQUIRE(r.entries.size() == 1);
  CHECK(r.entries[0].node == G1);
  CHECK(r.entries[0].probability == doctest::Approx(0.1 / 0.18));
  CHECK(r.evidence.assignments.at(B4) == 1);
  CHECK_THROWS_AS(rank_components(net, 7), BusNotInModelError);
}

TEST_CASE("a bus identical to LOL scores one") {
  BayesNet net;
  net.dag.nodes = {G1, B4, LOL};
  net.dag.parents = {{}, {G1}, {B4}};
  net.cpts = {{{0.1}}, {{0.05, 0.9}}, {{0.0, 1.0}}};
  net.canonicalize();
  const auto r = rank_load_buses(net);
  REQUIRE(r.entries.size() == 1);
  CHECK(r.entries[0].probability == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ranking ties break by node id and ignore storage order") {
  std::mt19937_64 rng(12);
  auto net = test::random_layered_net(rng, 6, 3);
  // Make B1 and B3 share the same table so they tie.
  const auto b1 = net.dag.find({NodeKind::B, 1}), b3 = net.dag.find({NodeKind::B, 3});
  net.dag.parents[b3] = net.dag.parents[b1];
  net.cpts[b3] = net.cpts[b1];
  auto& lol = net.cpts[net.dag.find(LOL)].p_true;
  for (std::size_t row = 0; row < lol.size(); ++row) lol[row] = row == 0 ? 0.01 : 0.9;  // symmetric in its parents
  const auto reference = rank_load_buses(net);

  auto shuffled = net;
  std::vector<std::size_t> order(net.dag.nodes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 0; i < order.size(); ++i) {
    shuffled.dag.nodes[i] = net.dag.nodes[order[i]];
    shuffled.dag.parents[i] = net.dag.parents[order[i]];
    shuffled.cpts[i] = net.cpts[order[i]];
  }
  shuffled.canonicalize();
  CHECK(shuffled == net);
  const auto again = rank_load_buses(shuffled);
  CHECK(again.entries == reference.entries);
  for (std::size_t i = 1; i < reference.entries.size(); ++i) {
    const auto& a = reference.entries[i - 1];
    const auto& b = reference.entries[i];
    CHECK((a.probability > b.probability || (a.probability == b.probability && a.node < b.node)));
  }
}

TEST_CASE("conditioning on LOL never lowers a bus posterior under an OR link") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    auto net = test::random_layered_net(rng, 5, 3);
    auto& lol = net.cpts[net.dag.find(LOL)].p_true;
    for (std::size_t row = 0; row < lol.size(); ++row) lol[row] = row == 0 ? 0.0 : 1.0;
    const auto conditional = rank_load_buses(net);
    const auto marginal = rank_load_buses_marginal(net);
    for (const auto& e : conditional.entries)
      for (const auto& m : marginal.entries)
        if (m.node == e.node) CHECK(e.probability >= m.probability - 1e-12);
  }
}

TEST_CASE("report serialisation") {
  const auto net = chain(0.2, 0.1, 0.5);
  const auto r = rank_components(net, 4, true);
  const auto json = r.to_json();
  CHECK(json.find("\"entries\"") != std::string::npos);
  CHECK(json.find("\"G1\"") != std::string::npos);
  CHECK(json.find("\"B4\": 1") != std::string::npos);
  const auto text = r.to_text();
  CHECK(text.find("G1    0.555556") != std::string::npos);
}
