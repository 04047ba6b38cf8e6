#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "relbn/grid.hpp"
#include "relbn/state.hpp"

namespace relbn {

struct Island {
  std::vector<int> buses;                // ascending bus ids
  std::vector<std::size_t> generators;   // indices of surviving generators
  std::vector<std::size_t> lines;        // indices of surviving lines
};

/// Connected components of the bus graph formed by surviving lines,
/// ordered by their lowest bus id.
struct IslandPartition {
  std::vector<Island> islands;
};

IslandPartition island_decomposition(const GridCase& grid, const SystemState& state);

/// DC injection-to-flow sensitivities for one island. Row r gives the flow on
/// lines[r] (from -> to, MW) per MW injected at each bus and withdrawn at the
/// slack; the slack column is zero.
struct InjectionShiftMatrix {
  std::vector<std::size_t> lines;
  std::vector<int> buses;
  int slack = 0;
  std::vector<double> values;  // row-major, lines.size() x buses.size()

  double operator()(std::size_t row, std::size_t col) const { return values[row * buses.size() + col]; }
  std::size_t column_of(int bus) const;
  /// Flows for a per-bus injection vector (MW, in `buses` order).
  std::vector<double> flows(std::span<const double> injection) const;
};

class SingularNetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

InjectionShiftMatrix injection_shift_matrix(const GridCase& grid, std::span<const int> island_buses,
                                            std::span<const std::size_t> lines, int slack);

enum class CurtailmentStatus { optimal, infeasible_fallback };

struct CurtailmentSolution {
  std::vector<double> dispatch;     // MW per generator (0 when down)
  std::vector<double> curtailment;  // MW per load, in grid.loads order
  std::vector<double> flows;        // MW per line (0 when down)
  double objective = 0.0;           // sum of weight * curtailment
  CurtailmentStatus status = CurtailmentStatus::optimal;

  double total_curtailment() const;
};

/// Minimum weighted load curtailment under DC flow limits, solved island by
/// island. Islands without surviving generation shed all of their load.
CurtailmentSolution solve_curtailment(const GridCase& grid, const SystemState& state);

/// All-up state for `grid`.
SystemState base_state(const GridCase& grid);

}  // namespace relbn
