#pragma once

#include <Eigen/Dense>

namespace conecert {
namespace lp {

/// Standard form: minimize c^T x subject to A x = b, x >= 0.
struct LinearProgram {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
};

enum class Status { kOptimal, kInfeasible, kUnbounded };

struct Options {
  double pivot_tol = 1e-9;
  double feasibility_tol = 1e-8;
  int max_iterations = 200000;
};

struct Solution {
  Status status = Status::kInfeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  /// Optimal phase-1 value (sum of artificials); zero for feasible programs.
  double infeasibility = 0.0;
  int iterations = 0;
};

/// Dense two-phase tableau simplex with Bland's anti-cycling rule.
/// Throws std::invalid_argument on inconsistent shapes or non-finite data,
/// std::runtime_error if the iteration cap is hit.
Solution solve(const LinearProgram& program, const Options& options = {});

/// Convenience: is {x >= 0 : A x = b} nonempty?
bool feasible(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Options& options = {});

}  // namespace lp
}  // namespace conecert
