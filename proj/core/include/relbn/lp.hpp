#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace relbn {

/// min cost'x  s.t.  A x = rhs,  lower <= x <= upper, all bounds finite.
/// `equalities` is dense row-major, rows() x cols().
struct LinearProgram {
  std::vector<double> cost;
  std::vector<double> equalities;
  std::vector<double> rhs;
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t cols() const { return cost.size(); }
  std::size_t rows() const { return rhs.size(); }
  double& a(std::size_t row, std::size_t col) { return equalities[row * cols() + col]; }
  double a(std::size_t row, std::size_t col) const { return equalities[row * cols() + col]; }

  /// Empty program with zeroed constraint matrix.
  static LinearProgram with_shape(std::size_t rows, std::size_t cols);
};

enum class LpStatus { optimal, infeasible };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  std::vector<double> x;
  double objective = 0.0;
  std::size_t iterations = 0;
};

struct LpOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-11;
  std::size_t max_iterations = 100000;
};

/// Dense bounded-variable primal simplex (two phases). Entering and leaving
/// variables are chosen by Bland's rule, so degenerate problems terminate
/// and results are deterministic. Throws std::invalid_argument for malformed
/// input (shape mismatch, infinite or crossed bounds).
LpResult lp_solve(const LinearProgram& lp, const LpOptions& options = {});

}  // namespace relbn
