#include "conecert/lp.h"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace conecert {
namespace lp {
namespace {

// Tableau layout: rows 0..m-1 constraints, row m the reduced-cost row.
// Columns 0..cols-1 variables, column `cols` the right-hand side.
class Tableau {
 public:
  Tableau(Eigen::MatrixXd t, std::vector<int> basis, const Options& opt)
      : t_(std::move(t)), basis_(std::move(basis)), opt_(opt) {}

  int rows() const { return static_cast<int>(basis_.size()); }
  int cols() const { return static_cast<int>(t_.cols()) - 1; }
  Eigen::MatrixXd& data() { return t_; }
  std::vector<int>& basis() { return basis_; }
  double rhs(int i) const { return t_(i, cols()); }
  double objective_value() const { return -t_(rows(), cols()); }

  void pivot(int row, int col) {
    t_.row(row) /= t_(row, col);
    for (int i = 0; i <= rows(); ++i) {
      if (i == row) continue;
      const double f = t_(i, col);
      if (f != 0.0) t_.row(i) -= f * t_.row(row);
    }
    for (int i = 0; i < rows(); ++i) {
      if (std::abs(t_(i, cols())) < 1e-14) t_(i, cols()) = std::max(0.0, t_(i, cols()));
    }
    basis_[row] = col;
  }

  // Runs Bland's rule over columns [0, allowed). Returns false if unbounded.
  bool optimize(int allowed, int& iterations) {
    while (true) {
      if (++iterations > opt_.max_iterations) {
        throw std::runtime_error("lp::solve: iteration limit reached");
      }
      int enter = -1;
      for (int j = 0; j < allowed; ++j) {
        if (t_(rows(), j) < -opt_.pivot_tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < rows(); ++i) {
        const double a = t_(i, enter);
        if (a <= opt_.pivot_tol) continue;
        const double ratio = std::max(0.0, rhs(i)) / a;
        if (leave < 0 || ratio < best - 1e-12) {
          best = ratio;
          leave = i;
        } else if (ratio <= best + 1e-12 && basis_[i] < basis_[leave]) {
          best = std::min(best, ratio);
          leave = i;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }

  void remove_row(int row) {
    const int last = rows();  // cost row index
    Eigen::MatrixXd next(t_.rows() - 1, t_.cols());
    int r = 0;
    for (int i = 0; i <= last; ++i) {
      if (i == row) continue;
      next.row(r++) = t_.row(i);
    }
    t_ = std::move(next);
    basis_.erase(basis_.begin() + row);
  }

 private:
  Eigen::MatrixXd t_;
  std::vector<int> basis_;
  Options opt_;
};

}  // namespace

Solution solve(const LinearProgram& program, const Options& options) {
  const Eigen::Index m = program.A.rows();
  const Eigen::Index n = program.A.cols();
  if (program.b.size() != m || program.c.size() != n) {
    throw std::invalid_argument("lp::solve: inconsistent dimensions");
  }
  if (!program.A.allFinite() || !program.b.allFinite() || !program.c.allFinite()) {
    throw std::invalid_argument("lp::solve: non-finite data");
  }

  Solution sol;
  if (m == 0) {
    // Only x >= 0: optimal at 0 unless some cost is negative.
    if ((program.c.array() < -options.pivot_tol).any()) {
      sol.status = Status::kUnbounded;
      return sol;
    }
    sol.status = Status::kOptimal;
    sol.x = Eigen::VectorXd::Zero(n);
    return sol;
  }

  // Phase 1: artificials a >= 0 with A x + a = b, b made nonnegative.
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double sign = program.b(i) < 0 ? -1.0 : 1.0;
    t.row(i).head(n) = sign * program.A.row(i);
    t(i, n + i) = 1.0;
    t(i, n + m) = sign * program.b(i);
  }
  for (Eigen::Index i = 0; i < m; ++i) t.row(m) -= t.row(i);
  for (Eigen::Index i = 0; i < m; ++i) t(m, n + i) = 0.0;

  std::vector<int> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[i] = static_cast<int>(n + i);
  Tableau tab(std::move(t), std::move(basis), options);
  const int total_cols = static_cast<int>(n + m);
  tab.optimize(total_cols, sol.iterations);

  const double scale = 1.0 + program.b.cwiseAbs().maxCoeff();
  sol.infeasibility = std::max(0.0, tab.objective_value());
  if (sol.infeasibility > options.feasibility_tol * scale) {
    sol.status = Status::kInfeasible;
    return sol;
  }

  // Drive artificials out of the basis; drop redundant rows.
  for (int i = tab.rows() - 1; i >= 0; --i) {
    if (tab.basis()[i] < n) continue;
    int col = -1;
    double best = options.pivot_tol;
    for (int j = 0; j < n; ++j) {
      if (std::abs(tab.data()(i, j)) > best) {
        best = std::abs(tab.data()(i, j));
        col = j;
      }
    }
    if (col >= 0) {
      tab.pivot(i, col);
    } else {
      tab.remove_row(i);
    }
  }

  // Phase 2: reduced costs for the true objective, artificials barred.
  Eigen::MatrixXd& d = tab.data();
  const int rows = tab.rows();
  d.row(rows).setZero();
  d.row(rows).head(n) = program.c.transpose();
  for (int i = 0; i < rows; ++i) {
    const int bcol = tab.basis()[i];
    const double cb = program.c(bcol);
    if (cb != 0.0) d.row(rows) -= cb * d.row(i);
  }
  if (!tab.optimize(static_cast<int>(n), sol.iterations)) {
    sol.status = Status::kUnbounded;
    return sol;
  }

  sol.status = Status::kOptimal;
  sol.x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < rows; ++i) {
    if (tab.basis()[i] < n) sol.x(tab.basis()[i]) = std::max(0.0, tab.rhs(i));
  }
  sol.objective = program.c.dot(sol.x);
  return sol;
}

bool feasible(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Options& options) {
  return solve({A, b, Eigen::VectorXd::Zero(A.cols())}, options).status != Status::kInfeasible;
}

}  // namespace lp
}  // namespace conecert
