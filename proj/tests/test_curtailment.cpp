#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "relbn/curtailment.hpp"
#include "support.hpp"

using namespace relbn;

namespace {

SystemState random_state(const GridCase& grid, std::mt19937_64& rng, double p_down) {
  std::bernoulli_distribution down(p_down);
  auto s = base_state(grid);
  for (auto& b : s.gen_down) b = down(rng);
  for (auto& b : s.line_down) b = down(rng);
  return s;
}

void check_solution_invariants(const GridCase& grid, const SystemState& state, const CurtailmentSolution& sol) {
  REQUIRE(sol.curtailment.size() == grid.loads.size());
  REQUIRE(sol.dispatch.size() == grid.generators.size());
  REQUIRE(sol.flows.size() == grid.lines.size());
  for (std::size_t i = 0; i < grid.loads.size(); ++i) {
    CHECK(sol.curtailment[i] >= 0.0);
    CHECK(sol.curtailment[i] <= grid.loads[i].demand);
  }
  for (std::size_t g = 0; g < grid.generators.size(); ++g) {
    if (state.gen_down[g]) {
      CHECK(sol.dispatch[g] == 0.0);
    } else {
      CHECK(sol.dispatch[g] >= grid.generators[g].p_min - 1e-6);
      CHECK(sol.dispatch[g] <= grid.generators[g].p_max + 1e-6);
    }
  }
  for (std::size_t l = 0; l < grid.lines.size(); ++l) {
    if (state.line_down[l]) CHECK(sol.flows[l] == 0.0);
    CHECK(std::abs(sol.flows[l]) <= grid.lines[l].rating + 1e-6);
  }
  // Per-island balance, and flows agree with an independent DC solve.
  std::vector<double> injection(grid.buses.size(), 0.0);
  for (std::size_t g = 0; g < grid.generators.size(); ++g)
    injection[grid.bus_index(grid.generators[g].bus)] += sol.dispatch[g];
  for (std::size_t i = 0; i < grid.loads.size(); ++i)
    injection[grid.bus_index(grid.loads[i].bus)] -= grid.loads[i].demand - sol.curtailment[i];
  for (const auto& island : test::bfs_islands(grid, state)) {
    double sum = 0.0;
    for (int bus : island) sum += injection[grid.bus_index(bus)];
    CHECK(std::abs(sum) < 1e-6);
  }
  const auto flows = test::dc_flows(grid, state, injection);
  for (std::size_t l = 0; l < grid.lines.size(); ++l) CHECK(sol.flows[l] == doctest::Approx(flows[l]).epsilon(1e-9).scale(1.0));
  double objective = 0.0;
  for (std::size_t i = 0; i < grid.loads.size(); ++i) objective += grid.loads[i].weight * sol.curtailment[i];
  CHECK(sol.objective == doctest::Approx(objective));
}

}  // namespace

TEST_CASE("connected base case is one island") {
  const auto g = builtin_case("rbts");
  const auto p = island_decomposition(g, base_state(g));
  REQUIRE(p.islands.size() == 1);
  CHECK(p.islands[0].buses == std::vector<int>{1, 2, 3, 4, 5, 6});
  CHECK(p.islands[0].generators.size() == 11);
  CHECK(p.islands[0].lines.size() == 9);
}

TEST_CASE("two-bus case with its line down splits in two") {
  const auto g = test::two_bus_case();
  auto s = base_state(g);
  s.line_down[0] = 1;
  const auto p = island_decomposition(g, s);
  REQUIRE(p.islands.size() == 2);
  CHECK(p.islands[0].buses == std::vector<int>{1});
  CHECK(p.islands[1].buses == std::vector<int>{2});
  CHECK(p.islands[1].generators.empty());
}

TEST_CASE("island partition matches breadth-first search") {
  const auto g = builtin_case("rbts");
  auto check = [&](const SystemState& s) {
    const auto p = island_decomposition(g, s);
    const auto oracle = test::bfs_islands(g, s);
    REQUIRE(p.islands.size() == oracle.size());
    for (std::size_t k = 0; k < oracle.size(); ++k) {
      CHECK(std::vector<int>(oracle[k].begin(), oracle[k].end()) == p.islands[k].buses);
      for (auto l : p.islands[k].lines) {
        CHECK(oracle[k].contains(g.lines[l].from_bus));
        CHECK(oracle[k].contains(g.lines[l].to_bus));
      }
    }
  };
  auto s = base_state(g);
  s.line_down[0] = 1;
  s.line_down[5] = 1;
  check(s);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) check(random_state(g, rng, 0.4));
  const auto rts = builtin_case("ieee-rts-24");
  for (int i = 0; i < 100; ++i) {
    const auto r = random_state(rts, rng, 0.3);
    CHECK(island_decomposition(rts, r).islands.size() == test::bfs_islands(rts, r).size());
  }
}

TEST_CASE("single line carries the whole injection") {
  const auto g = test::two_bus_case();
  const std::vector<int> buses{1, 2};
  const std::vector<std::size_t> lines{0};
  const auto isf = injection_shift_matrix(g, buses, lines, 1);
  CHECK(std::abs(isf(0, isf.column_of(2))) == doctest::Approx(1.0));
  CHECK(isf(0, isf.column_of(1)) == 0.0);
}

TEST_CASE("triangle shift factors") {
  const auto g = test::triangle_case();
  const std::vector<int> buses{1, 2, 3};
  const std::vector<std::size_t> lines{0, 1, 2};
  const auto isf = injection_shift_matrix(g, buses, lines, 2);
  const auto c1 = isf.column_of(1);
  CHECK(isf(0, c1) == doctest::Approx(2.0 / 3.0));  // 1 -> 2
  CHECK(isf(1, c1) == doctest::Approx(1.0 / 3.0));  // 1 -> 3
  CHECK(isf(2, c1) == doctest::Approx(1.0 / 3.0));  // 3 -> 2
  const std::vector<double> zero(3, 0.0);
  for (double f : isf.flows(zero)) CHECK(f == 0.0);
}

TEST_CASE("shift factors agree with a direct DC solve") {
  const auto g = builtin_case("ieee-rts-24");
  const auto s = base_state(g);
  const auto p = island_decomposition(g, s);
  const auto& island = p.islands[0];
  const auto isf = injection_shift_matrix(g, island.buses, island.lines, g.slack_bus());
  std::mt19937_64 rng(3);
  std::normal_distribution<double> mw(0.0, 100.0);
  std::vector<double> inj(g.buses.size());
  for (auto& v : inj) v = mw(rng);
  double sum = std::accumulate(inj.begin(), inj.end(), 0.0);
  inj[g.bus_index(g.slack_bus())] -= sum;
  std::vector<double> island_inj(island.buses.size());
  for (std::size_t c = 0; c < island.buses.size(); ++c) island_inj[c] = inj[g.bus_index(island.buses[c])];
  const auto ours = isf.flows(island_inj);
  const auto oracle = test::dc_flows(g, s, inj);
  for (std::size_t r = 0; r < island.lines.size(); ++r) CHECK(ours[r] == doctest::Approx(oracle[island.lines[r]]).epsilon(1e-9));
}

TEST_CASE("transfer limit forces curtailment") {
  const auto g = test::two_bus_case(100.0, 80.0, 50.0);
  const auto sol = solve_curtailment(g, base_state(g));
  CHECK(sol.curtailment[0] == doctest::Approx(30.0));
  CHECK(sol.objective == doctest::Approx(30.0));
  CHECK(sol.status == CurtailmentStatus::optimal);
  check_solution_invariants(g, base_state(g), sol);
}

TEST_CASE("island without generation sheds everything") {
  const auto g = test::two_bus_case();
  auto s = base_state(g);
  s.line_down[0] = 1;
  const auto sol = solve_curtailment(g, s);
  CHECK(sol.curtailment[0] == 80.0);
  CHECK(sol.dispatch[0] == 0.0);
}

TEST_CASE("bundled cases are adequate in the base state") {
  for (const auto& name : builtin_case_names()) {
    const auto g = builtin_case(name);
    const auto sol = solve_curtailment(g, base_state(g));
    CHECK(sol.objective == 0.0);
    CHECK(sol.total_curtailment() == 0.0);
    check_solution_invariants(g, base_state(g), sol);
  }
}

TEST_CASE("random states satisfy every solution invariant") {
  std::mt19937_64 rng(11);
  for (const auto& name : builtin_case_names()) {
    const auto g = builtin_case(name);
    for (int i = 0; i < 150; ++i) {
      const auto s = random_state(g, rng, name == "rbts" ? 0.25 : 0.12);
      check_solution_invariants(g, s, solve_curtailment(g, s));
    }
  }
}

TEST_CASE("lattice oracle on every state of the three-bus case") {
  const auto g = test::lattice_case();
  for (const auto& s : test::all_states(g)) {
    const auto sol = solve_curtailment(g, s);
    const double oracle = test::lattice_curtailment_oracle(g, s);
    CHECK(oracle - sol.objective >= -1e-6);
    CHECK(oracle - sol.objective <= 0.1);
    check_solution_invariants(g, s, sol);
  }
}

TEST_CASE("raising a line rating never increases curtailment") {
  std::mt19937_64 rng(5);
  const auto base = builtin_case("rbts");
  for (int i = 0; i < 200; ++i) {
    const auto s = random_state(base, rng, 0.3);
    const auto before = solve_curtailment(base, s).objective;
    auto g = base;
    const auto l = std::uniform_int_distribution<std::size_t>(0, g.lines.size() - 1)(rng);
    g.lines[l].rating *= 1.0 + std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    CHECK(solve_curtailment(g, s).objective <= before + 1e-7);
  }
}

TEST_CASE("a heavier weight moves curtailment away from its bus") {
  // Generation is short by 30 MW, no line binds, and either load can absorb it.
  auto g = test::lattice_case();
  g.generators[0].p_max = 10.0;
  g.generators[1].p_max = 10.0;
  for (auto& line : g.lines) line.rating = 500.0;
  auto s = base_state(g);
  for (std::size_t heavy = 0; heavy < g.loads.size(); ++heavy) {
    for (auto& load : g.loads) load.weight = 1.0;
    g.loads[heavy].weight = 5.0;
    const auto sol = solve_curtailment(g, s);
    CHECK(sol.curtailment[heavy] == 0.0);
    CHECK(sol.total_curtailment() == doctest::Approx(30.0));
  }
}

TEST_CASE("dimension mismatch is rejected") {
  const auto g = test::two_bus_case();
  SystemState s;
  CHECK_THROWS_AS(solve_curtailment(g, s), std::invalid_argument);
}
