#include "relbn/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace relbn {

LinearProgram LinearProgram::with_shape(std::size_t rows, std::size_t cols) {
  LinearProgram lp;
  lp.cost.assign(cols, 0.0);
  lp.equalities.assign(rows * cols, 0.0);
  lp.rhs.assign(rows, 0.0);
  lp.lower.assign(cols, 0.0);
  lp.upper.assign(cols, 0.0);
  return lp;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Full tableau over [A | S] where S = diag(sign) holds one artificial per row.
// tableau = B^-1 [A | S]; the artificial block therefore carries B^-1 S.
class Tableau {
 public:
  Tableau(const LinearProgram& lp, const LpOptions& options)
      : lp_(lp), opt_(options), m_(lp.rows()), n_(lp.cols()), width_(n_ + m_) {
    lower_.assign(width_, 0.0);
    upper_.assign(width_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      lower_[j] = lp.lower[j];
      upper_[j] = lp.upper[j];
    }
    x_.assign(width_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) x_[j] = lower_[j];

    sign_.assign(m_, 1.0);
    t_.assign(m_ * width_, 0.0);
    basis_.assign(m_, 0);
    is_basic_.assign(width_, false);
    for (std::size_t i = 0; i < m_; ++i) {
      double residual = lp.rhs[i];
      for (std::size_t j = 0; j < n_; ++j) residual -= lp.a(i, j) * x_[j];
      sign_[i] = residual >= 0.0 ? 1.0 : -1.0;
      for (std::size_t j = 0; j < n_; ++j) at(i, j) = sign_[i] * lp.a(i, j);
      at(i, n_ + i) = 1.0;
      const std::size_t art = n_ + i;
      upper_[art] = kInf;
      x_[art] = std::abs(residual);
      basis_[i] = art;
      is_basic_[art] = true;
    }
  }

  // Phase 1: minimise the sum of artificials. Returns false if infeasible.
  bool phase_one() {
    cost_.assign(width_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) cost_[n_ + i] = 1.0;
    iterate();
    refresh_basic_values();

    double infeasibility = 0.0, scale = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      infeasibility += x_[n_ + i];
      scale = std::max(scale, std::abs(lp_.rhs[i]));
    }
    if (infeasibility > opt_.feasibility_tol * scale * static_cast<double>(std::max<std::size_t>(m_, 1)))
      return false;

    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      for (std::size_t j = 0; j < n_; ++j) {
        if (!is_basic_[j] && std::abs(at(i, j)) > 1e-7) {
          pivot(i, j);
          break;
        }
      }
    }
    // Artificials are pinned to zero from here on; a basic one marks a redundant row.
    for (std::size_t i = 0; i < m_; ++i) {
      lower_[n_ + i] = upper_[n_ + i] = 0.0;
      x_[n_ + i] = 0.0;
    }
    refresh_basic_values();
    return true;
  }

  void phase_two() {
    cost_.assign(width_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) cost_[j] = lp_.cost[j];
    iterate();
    refresh_basic_values();
  }

  std::vector<double> solution() const {
    std::vector<double> x(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_));
    for (std::size_t j = 0; j < n_; ++j) x[j] = std::clamp(x[j], lower_[j], upper_[j]);
    return x;
  }

  std::size_t iterations() const { return iterations_; }

 private:
  double& at(std::size_t i, std::size_t j) { return t_[i * width_ + j]; }
  double at(std::size_t i, std::size_t j) const { return t_[i * width_ + j]; }

  void compute_reduced_costs() {
    reduced_.assign(width_, 0.0);
    for (std::size_t j = 0; j < width_; ++j) {
      double d = cost_[j];
      for (std::size_t i = 0; i < m_; ++i) d -= cost_[basis_[i]] * at(i, j);
      reduced_[j] = d;
    }
  }

  bool at_upper(std::size_t j) const { return x_[j] >= upper_[j] && upper_[j] > lower_[j]; }

  void iterate() {
    compute_reduced_costs();
    for (;;) {
      if (++iterations_ > opt_.max_iterations) throw std::runtime_error("lp_solve: iteration limit reached");

      // Bland: lowest-index improving nonbasic column.
      std::size_t entering = width_;
      double direction = 0.0;
      for (std::size_t j = 0; j < width_; ++j) {
        if (is_basic_[j] || upper_[j] <= lower_[j]) continue;
        if (!at_upper(j) && reduced_[j] < -opt_.optimality_tol) {
          entering = j;
          direction = 1.0;
          break;
        }
        if (at_upper(j) && reduced_[j] > opt_.optimality_tol) {
          entering = j;
          direction = -1.0;
          break;
        }
      }
      if (entering == width_) return;

      double step = upper_[entering] - lower_[entering];
      std::size_t leaving_row = m_;
      for (std::size_t i = 0; i < m_; ++i) {
        const double alpha = direction * at(i, entering);
        const std::size_t b = basis_[i];
        double limit;
        if (alpha > opt_.pivot_tol) {
          limit = std::max(0.0, x_[b] - lower_[b]) / alpha;
        } else if (alpha < -opt_.pivot_tol && std::isfinite(upper_[b])) {
          limit = std::max(0.0, upper_[b] - x_[b]) / -alpha;
        } else {
          continue;
        }
        const double slack = 1e-12 * std::max(1.0, std::abs(step));
        if (limit < step - slack) {
          step = limit;
          leaving_row = i;
        } else if (leaving_row < m_ && limit <= step + slack && b < basis_[leaving_row]) {
          leaving_row = i;
        }
      }
      if (!std::isfinite(step)) throw std::logic_error("lp_solve: unbounded direction with finite bounds");

      x_[entering] += direction * step;
      for (std::size_t i = 0; i < m_; ++i) x_[basis_[i]] -= direction * step * at(i, entering);

      if (leaving_row == m_) {
        x_[entering] = direction > 0 ? upper_[entering] : lower_[entering];
        continue;
      }
      const std::size_t leaving = basis_[leaving_row];
      x_[leaving] = direction * at(leaving_row, entering) > 0 ? lower_[leaving] : upper_[leaving];
      // An artificial that leaves never returns.
      if (leaving >= n_) x_[leaving] = upper_[leaving] = lower_[leaving] = 0.0;
      pivot(leaving_row, entering);
    }
  }

  void pivot(std::size_t row, std::size_t col) {
    const double p = at(row, col);
    for (std::size_t j = 0; j < width_; ++j) at(row, j) /= p;
    at(row, col) = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == row) continue;
      const double f = at(i, col);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < width_; ++j) at(i, j) -= f * at(row, j);
      at(i, col) = 0.0;
    }
    if (!reduced_.empty()) {
      const double f = reduced_[col];
      if (f != 0.0) {
        for (std::size_t j = 0; j < width_; ++j) reduced_[j] -= f * at(row, j);
        reduced_[col] = 0.0;
      }
    }
    is_basic_[basis_[row]] = false;
    basis_[row] = col;
    is_basic_[col] = true;
  }

  // x_B = B^-1 (rhs - N x_N), with B^-1 = (artificial block) * S.
  void refresh_basic_values() {
    std::vector<double> residual(lp_.rhs);
    for (std::size_t j = 0; j < width_; ++j) {
      if (is_basic_[j] || x_[j] == 0.0) continue;
      if (j < n_) {
        for (std::size_t k = 0; k < m_; ++k) residual[k] -= lp_.a(k, j) * x_[j];
      } else {
        residual[j - n_] -= sign_[j - n_] * x_[j];
      }
    }
    for (std::size_t i = 0; i < m_; ++i) {
      double v = 0.0;
      for (std::size_t k = 0; k < m_; ++k) v += at(i, n_ + k) * sign_[k] * residual[k];
      const std::size_t b = basis_[i];
      const double tol = 1e-9 * std::max(1.0, std::abs(v));
      if (v < lower_[b] && v > lower_[b] - tol) v = lower_[b];
      if (v > upper_[b] && v < upper_[b] + tol) v = upper_[b];
      x_[b] = v;
    }
    compute_reduced_costs();
  }

  const LinearProgram& lp_;
  LpOptions opt_;
  std::size_t m_, n_, width_;
  std::vector<double> t_, lower_, upper_, x_, sign_, cost_, reduced_;
  std::vector<std::size_t> basis_;
  std::vector<bool> is_basic_;
  std::size_t iterations_ = 0;
};

void check_shape(const LinearProgram& lp) {
  const auto n = lp.cols(), m = lp.rows();
  if (lp.equalities.size() != n * m || lp.lower.size() != n || lp.upper.size() != n)
    throw std::invalid_argument("lp_solve: inconsistent problem dimensions");
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(lp.lower[j]) || !std::isfinite(lp.upper[j]) || lp.lower[j] > lp.upper[j])
      throw std::invalid_argument("lp_solve: variable " + std::to_string(j) + " needs finite bounds lower <= upper");
  }
}

}  // namespace

LpResult lp_solve(const LinearProgram& lp, const LpOptions& options) {
  check_shape(lp);
  Tableau tableau(lp, options);
  LpResult result;
  if (!tableau.phase_one()) {
    result.status = LpStatus::infeasible;
    result.iterations = tableau.iterations();
    return result;
  }
  tableau.phase_two();
  result.status = LpStatus::optimal;
  result.x = tableau.solution();
  result.iterations = tableau.iterations();
  for (std::size_t j = 0; j < lp.cols(); ++j) result.objective += lp.cost[j] * result.x[j];
  return result;
}

}  // namespace relbn
