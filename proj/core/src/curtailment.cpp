#include "relbn/curtailment.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "relbn/lp.hpp"

namespace relbn {

SystemState base_state(const GridCase& grid) {
  SystemState state;
  state.gen_down.assign(grid.generators.size(), 0);
  state.line_down.assign(grid.lines.size(), 0);
  return state;
}

namespace {

void check_dimensions(const GridCase& grid, const SystemState& state) {
  if (state.gen_down.size() != grid.generators.size() || state.line_down.size() != grid.lines.size())
    throw std::invalid_argument("system state dimensions do not match case '" + grid.name + "'");
}

}  // namespace

IslandPartition island_decomposition(const GridCase& grid, const SystemState& state) {
  check_dimensions(grid, state);
  const std::size_t n = grid.buses.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (std::size_t l = 0; l < grid.lines.size(); ++l) {
    if (state.line_down[l]) continue;
    const auto a = find(grid.bus_index(grid.lines[l].from_bus));
    const auto b = find(grid.bus_index(grid.lines[l].to_bus));
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }

  // Group by root, then order islands by their lowest bus id.
  std::map<std::size_t, Island> by_root;
  for (std::size_t i = 0; i < n; ++i) by_root[find(i)].buses.push_back(grid.buses[i].id);
  std::vector<Island> islands;
  for (auto& [root, island] : by_root) {
    std::sort(island.buses.begin(), island.buses.end());
    islands.push_back(std::move(island));
  }
  std::sort(islands.begin(), islands.end(),
            [](const Island& a, const Island& b) { return a.buses.front() < b.buses.front(); });

  std::map<int, std::size_t> island_of_bus;
  for (std::size_t k = 0; k < islands.size(); ++k)
    for (int bus : islands[k].buses) island_of_bus[bus] = k;
  for (std::size_t g = 0; g < grid.generators.size(); ++g)
    if (!state.gen_down[g]) islands[island_of_bus.at(grid.generators[g].bus)].generators.push_back(g);
  for (std::size_t l = 0; l < grid.lines.size(); ++l)
    if (!state.line_down[l]) islands[island_of_bus.at(grid.lines[l].from_bus)].lines.push_back(l);
  return {std::move(islands)};
}

std::size_t InjectionShiftMatrix::column_of(int bus) const {
  auto it = std::find(buses.begin(), buses.end(), bus);
  if (it == buses.end()) throw std::out_of_range("bus " + std::to_string(bus) + " not in island");
  return static_cast<std::size_t>(it - buses.begin());
}

std::vector<double> InjectionShiftMatrix::flows(std::span<const double> injection) const {
  if (injection.size() != buses.size()) throw std::invalid_argument("injection vector has wrong length");
  std::vector<double> out(lines.size(), 0.0);
  for (std::size_t r = 0; r < lines.size(); ++r)
    for (std::size_t c = 0; c < buses.size(); ++c) out[r] += (*this)(r, c) * injection[c];
  return out;
}

InjectionShiftMatrix injection_shift_matrix(const GridCase& grid, std::span<const int> island_buses,
                                            std::span<const std::size_t> lines, int slack) {
  InjectionShiftMatrix isf;
  isf.buses.assign(island_buses.begin(), island_buses.end());
  isf.lines.assign(lines.begin(), lines.end());
  isf.slack = slack;
  const std::size_t n = isf.buses.size();
  const std::size_t slack_col = isf.column_of(slack);
  isf.values.assign(isf.lines.size() * n, 0.0);
  if (n == 1) return isf;

  // Reduced index: island column -> row of the slack-free susceptance matrix.
  std::vector<std::ptrdiff_t> reduced(n, -1);
  for (std::size_t c = 0, k = 0; c < n; ++c)
    if (c != slack_col) reduced[c] = static_cast<std::ptrdiff_t>(k++);

  Eigen::MatrixXd susceptance = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n - 1),
                                                       static_cast<Eigen::Index>(n - 1));
  std::vector<std::pair<std::size_t, std::size_t>> ends;
  for (auto l : isf.lines) {
    const auto& line = grid.lines[l];
    const auto a = isf.column_of(line.from_bus), b = isf.column_of(line.to_bus);
    ends.emplace_back(a, b);
    const double y = 1.0 / line.reactance;
    const auto ra = reduced[a], rb = reduced[b];
    if (ra >= 0) susceptance(ra, ra) += y;
    if (rb >= 0) susceptance(rb, rb) += y;
    if (ra >= 0 && rb >= 0) {
      susceptance(ra, rb) -= y;
      susceptance(rb, ra) -= y;
    }
  }

  Eigen::LLT<Eigen::MatrixXd> factor(susceptance);
  if (factor.info() != Eigen::Success)
    throw SingularNetworkError("reduced susceptance matrix is singular; island is not connected");
  // Column k of the inverse: angles for a unit injection at reduced bus k.
  const Eigen::MatrixXd angles = factor.solve(Eigen::MatrixXd::Identity(susceptance.rows(), susceptance.cols()));
  if (!angles.allFinite()) throw SingularNetworkError("reduced susceptance matrix is ill-conditioned");

  for (std::size_t r = 0; r < isf.lines.size(); ++r) {
    const auto [a, b] = ends[r];
    const double y = 1.0 / grid.lines[isf.lines[r]].reactance;
    for (std::size_t c = 0; c < n; ++c) {
      const auto rc = reduced[c];
      if (rc < 0) continue;
      const double ta = reduced[a] >= 0 ? angles(reduced[a], rc) : 0.0;
      const double tb = reduced[b] >= 0 ? angles(reduced[b], rc) : 0.0;
      isf.values[r * n + c] = y * (ta - tb);
    }
  }
  return isf;
}

double CurtailmentSolution::total_curtailment() const {
  return std::accumulate(curtailment.begin(), curtailment.end(), 0.0);
}

namespace {

int island_slack(const GridCase& grid, const Island& island) {
  int best = island.buses.front();
  bool found = false;
  for (auto g : island.generators) {
    const int bus = grid.generators[g].bus;
    if (!found || bus < best) {
      best = bus;
      found = true;
    }
  }
  return best;
}

// Solves one island with surviving generation; returns false on LP infeasibility.
bool solve_island(const GridCase& grid, const Island& island, bool relax_min_output, CurtailmentSolution& out) {
  const auto isf = injection_shift_matrix(grid, island.buses, island.lines, island_slack(grid, island));
  const std::size_t n_bus = island.buses.size();

  // Generation aggregated per bus; dispatch is split back per unit afterwards.
  std::vector<int> gen_buses;
  std::map<int, std::pair<double, double>> gen_range;
  for (auto g : island.generators) {
    const auto& gen = grid.generators[g];
    auto& range = gen_range[gen.bus];
    range.first += relax_min_output ? 0.0 : gen.p_min;
    range.second += gen.p_max;
  }
  for (const auto& [bus, range] : gen_range) gen_buses.push_back(bus);

  std::vector<std::size_t> island_loads;
  for (std::size_t i = 0; i < grid.loads.size(); ++i)
    if (std::binary_search(island.buses.begin(), island.buses.end(), grid.loads[i].bus)) island_loads.push_back(i);

  // Columns: curtailment per load, generation per bus, flow slack per line.
  const std::size_t n_c = island_loads.size(), n_g = gen_buses.size(), n_l = island.lines.size();
  const std::size_t cols = n_c + n_g + n_l, rows = 1 + n_l;
  auto lp = LinearProgram::with_shape(rows, cols);

  double demand = 0.0;
  std::vector<double> withdrawal(n_bus, 0.0);
  for (std::size_t k = 0; k < n_c; ++k) {
    const auto& load = grid.loads[island_loads[k]];
    lp.cost[k] = load.weight;
    lp.lower[k] = 0.0;
    lp.upper[k] = load.demand;
    lp.a(0, k) = 1.0;
    demand += load.demand;
    withdrawal[isf.column_of(load.bus)] += load.demand;
    for (std::size_t r = 0; r < n_l; ++r) lp.a(1 + r, k) = isf(r, isf.column_of(load.bus));
  }
  for (std::size_t k = 0; k < n_g; ++k) {
    const auto col = n_c + k;
    const auto& range = gen_range[gen_buses[k]];
    lp.lower[col] = range.first;
    lp.upper[col] = range.second;
    lp.a(0, col) = 1.0;
    for (std::size_t r = 0; r < n_l; ++r) lp.a(1 + r, col) = isf(r, isf.column_of(gen_buses[k]));
  }
  lp.rhs[0] = demand;
  for (std::size_t r = 0; r < n_l; ++r) {
    const auto col = n_c + n_g + r;
    const double rating = grid.lines[island.lines[r]].rating;
    lp.lower[col] = -rating;
    lp.upper[col] = rating;
    lp.a(1 + r, col) = -1.0;
    double rhs = 0.0;
    for (std::size_t c = 0; c < n_bus; ++c) rhs += isf(r, c) * withdrawal[c];
    lp.rhs[1 + r] = rhs;
  }

  const auto result = lp_solve(lp);
  if (result.status != LpStatus::optimal) return false;

  std::vector<double> injection(n_bus, 0.0);
  for (std::size_t c = 0; c < n_bus; ++c) injection[c] = -withdrawal[c];
  for (std::size_t k = 0; k < n_c; ++k) {
    const auto& load = grid.loads[island_loads[k]];
    double c = std::clamp(result.x[k], 0.0, load.demand);
    if (c < 1e-9) c = 0.0;
    out.curtailment[island_loads[k]] = c;
    injection[isf.column_of(load.bus)] += c;
  }
  for (std::size_t k = 0; k < n_g; ++k) {
    double remaining = result.x[n_c + k];
    injection[isf.column_of(gen_buses[k])] += remaining;
    // Every unit starts at its minimum; the rest fills units in index order.
    for (auto g : island.generators) {
      const auto& gen = grid.generators[g];
      if (gen.bus != gen_buses[k]) continue;
      const double floor = relax_min_output ? 0.0 : gen.p_min;
      out.dispatch[g] = floor;
      remaining -= floor;
    }
    for (auto g : island.generators) {
      const auto& gen = grid.generators[g];
      if (gen.bus != gen_buses[k] || remaining <= 0.0) continue;
      const double extra = std::min(remaining, gen.p_max - out.dispatch[g]);
      out.dispatch[g] += extra;
      remaining -= extra;
    }
  }
  const auto flows = isf.flows(injection);
  for (std::size_t r = 0; r < n_l; ++r) out.flows[island.lines[r]] = flows[r];
  return true;
}

}  // namespace

CurtailmentSolution solve_curtailment(const GridCase& grid, const SystemState& state) {
  const auto partition = island_decomposition(grid, state);
  CurtailmentSolution out;
  out.dispatch.assign(grid.generators.size(), 0.0);
  out.curtailment.assign(grid.loads.size(), 0.0);
  out.flows.assign(grid.lines.size(), 0.0);

  for (const auto& island : partition.islands) {
    double capacity = 0.0;
    for (auto g : island.generators) capacity += grid.generators[g].p_max;
    if (capacity <= 0.0) {
      for (std::size_t i = 0; i < grid.loads.size(); ++i)
        if (std::binary_search(island.buses.begin(), island.buses.end(), grid.loads[i].bus))
          out.curtailment[i] = grid.loads[i].demand;
      continue;
    }
    if (!solve_island(grid, island, false, out)) {
      out.status = CurtailmentStatus::infeasible_fallback;
      if (!solve_island(grid, island, true, out))
        throw std::runtime_error("curtailment LP infeasible even with minimum outputs relaxed");
    }
  }
  for (std::size_t i = 0; i < grid.loads.size(); ++i) out.objective += grid.loads[i].weight * out.curtailment[i];
  return out;
}

}  // namespace relbn
