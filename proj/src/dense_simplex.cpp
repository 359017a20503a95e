#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "seqot/lp.hpp"

namespace seqot::lp {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

/// Full tableau. Columns 0..cols-1 are structural, cols..cols+rows-1 are the
/// phase-one artificials, the last column is the right-hand side.
class Tableau {
 public:
  Tableau(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> b)
      : rows_(rows), cols_(cols), width_(cols + rows + 1), t_((rows + 1) * width_, 0.0),
        basis_(rows), active_(rows, true), sign_(rows, 1.0) {
    for (std::size_t r = 0; r < rows; ++r) {
      sign_[r] = b[r] < 0.0 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < cols; ++j) at(r, j) = sign_[r] * a[r * cols + j];
      at(r, cols + r) = 1.0;
      at(r, width_ - 1) = sign_[r] * b[r];
      basis_[r] = cols + r;
    }
  }

  double& at(std::size_t r, std::size_t c) { return t_[r * width_ + c]; }
  double at(std::size_t r, std::size_t c) const { return t_[r * width_ + c]; }
  double& obj(std::size_t c) { return t_[rows_ * width_ + c]; }
  double obj(std::size_t c) const { return t_[rows_ * width_ + c]; }

  /// Loads min cost.x into the objective row as reduced costs w.r.t. the
  /// current basis.
  void set_objective(const std::vector<double>& full_cost) {
    for (std::size_t c = 0; c < width_; ++c) obj(c) = c + 1 < width_ ? full_cost[c] : 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      if (!active_[r]) continue;
      const double cb = full_cost[basis_[r]];
      if (cb == 0.0) continue;
      for (std::size_t c = 0; c < width_; ++c) obj(c) -= cb * at(r, c);
    }
  }

  void pivot(std::size_t pr, std::size_t pc) {
    const double inv = 1.0 / at(pr, pc);
    double* prow = &t_[pr * width_];
    for (std::size_t c = 0; c < width_; ++c) prow[c] *= inv;
    prow[pc] = 1.0;
    for (std::size_t r = 0; r <= rows_; ++r) {
      if (r == pr) continue;
      double* row = &t_[r * width_];
      const double f = row[pc];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < width_; ++c) row[c] -= f * prow[c];
      row[pc] = 0.0;
    }
    basis_[pr] = pc;
  }

  /// Runs primal simplex on the current objective. Columns >= allowed_cols
  /// never enter. Dantzig pricing, switching to Bland's rule after a streak
  /// of degenerate pivots.
  LpStatus optimize(std::size_t allowed_cols, std::size_t max_iterations, std::size_t& iterations) {
    std::size_t degenerate_streak = 0;
    double scale = 1.0;
    for (std::size_t c = 0; c < allowed_cols; ++c) scale = std::max(scale, std::abs(obj(c)));
    const double rc_tol = 1e-11 * scale;
    while (true) {
      if (iterations >= max_iterations) return LpStatus::iteration_limit;
      const bool bland = degenerate_streak > 50;
      std::size_t enter = kNone;
      double best = -rc_tol;
      for (std::size_t c = 0; c < allowed_cols; ++c) {
        if (obj(c) < best) {
          enter = c;
          if (bland) break;
          best = obj(c);
        }
      }
      if (enter == kNone) return LpStatus::optimal;

      std::size_t leave = kNone;
      double ratio = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < rows_; ++r) {
        if (!active_[r]) continue;
        const double v = at(r, enter);
        if (v <= kPivotTol) continue;
        const double q = at(r, width_ - 1) / v;
        if (q < ratio - 1e-14 || (q <= ratio + 1e-14 && leave != kNone && basis_[r] < basis_[leave])) {
          ratio = q;
          leave = r;
        }
      }
      if (leave == kNone) return LpStatus::unbounded;
      degenerate_streak = ratio <= 1e-14 ? degenerate_streak + 1 : 0;
      pivot(leave, enter);
      ++iterations;
    }
  }

  /// After phase one: pivot artificials out of the basis, or retire their
  /// row when it is a combination of the others.
  void expel_artificials() {
    for (std::size_t r = 0; r < rows_; ++r) {
      if (basis_[r] < cols_) continue;
      std::size_t pc = kNone;
      double best = kPivotTol * 100;
      for (std::size_t c = 0; c < cols_; ++c) {
        if (std::abs(at(r, c)) > best) {
          best = std::abs(at(r, c));
          pc = c;
        }
      }
      if (pc == kNone) {
        active_[r] = false;
      } else {
        pivot(r, pc);
      }
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t width() const { return width_; }
  bool active(std::size_t r) const { return active_[r]; }
  std::size_t basic(std::size_t r) const { return basis_[r]; }
  double sign(std::size_t r) const { return sign_[r]; }

 private:
  std::size_t rows_, cols_, width_;
  std::vector<double> t_;
  std::vector<std::size_t> basis_;
  std::vector<bool> active_;
  std::vector<double> sign_;
};

}  // namespace

LpSolution solve_standard_form(std::span<const double> a, std::size_t rows, std::size_t cols,
                               std::span<const double> b, std::span<const double> c,
                               std::size_t max_iterations) {
  if (a.size() != rows * cols || b.size() != rows || c.size() != cols)
    throw std::invalid_argument("solve_standard_form: inconsistent dimensions");
  LpSolution sol;
  Tableau tab(a, rows, cols, b);

  // phase one: minimize the sum of artificials
  std::vector<double> cost(tab.width() - 1, 0.0);
  for (std::size_t r = 0; r < rows; ++r) cost[cols + r] = 1.0;
  tab.set_objective(cost);
  LpStatus st = tab.optimize(cols, max_iterations, sol.iterations);
  if (st == LpStatus::iteration_limit) {
    sol.status = st;
    return sol;
  }
  double bscale = 1.0;
  for (double v : b) bscale = std::max(bscale, std::abs(v));
  double infeas = 0.0;
  for (std::size_t r = 0; r < rows; ++r)
    if (tab.basic(r) >= cols) infeas += tab.at(r, tab.width() - 1);
  if (infeas > 1e-9 * bscale) {
    sol.status = LpStatus::infeasible;
    return sol;
  }
  tab.expel_artificials();

  // phase two
  std::fill(cost.begin(), cost.end(), 0.0);
  std::copy(c.begin(), c.end(), cost.begin());
  tab.set_objective(cost);
  st = tab.optimize(cols, max_iterations, sol.iterations);
  sol.status = st;
  if (st != LpStatus::optimal) return sol;

  // Recompute the basic solution and the duals from the original data with
  // an LU factorization of the final basis; this removes the round-off the
  // tableau accumulated over many pivots.
  std::vector<std::size_t> active_rows, basic_cols;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!tab.active(r)) continue;
    active_rows.push_back(r);
    basic_cols.push_back(tab.basic(r));
  }
  const auto k = static_cast<Eigen::Index>(active_rows.size());
  Eigen::MatrixXd basis(k, k);
  Eigen::VectorXd rhs(k), cb(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const std::size_t r = active_rows[static_cast<std::size_t>(i)];
    rhs(i) = b[r];
    for (Eigen::Index j = 0; j < k; ++j) {
      const std::size_t col = basic_cols[static_cast<std::size_t>(j)];
      basis(i, j) = a[r * cols + col];
    }
  }
  for (Eigen::Index j = 0; j < k; ++j) cb(j) = c[basic_cols[static_cast<std::size_t>(j)]];
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis);
  const Eigen::VectorXd xb = lu.solve(rhs);
  const Eigen::VectorXd y = lu.transpose().solve(cb);

  sol.x.assign(cols, 0.0);
  for (Eigen::Index j = 0; j < k; ++j)
    sol.x[basic_cols[static_cast<std::size_t>(j)]] = std::max(0.0, xb(j));
  sol.duals.assign(rows, 0.0);
  for (Eigen::Index i = 0; i < k; ++i) sol.duals[active_rows[static_cast<std::size_t>(i)]] = y(i);
  sol.value = 0.0;
  for (std::size_t j = 0; j < cols; ++j) sol.value += c[j] * sol.x[j];
  return sol;
}

}  // namespace seqot::lp
