#pragma once

/// @file
/// Kalman controllability, minimum-energy steering through the
/// controllability Gramian, and steering between PSD matrices
///
///   X0 = E(Q(t0)),  X1 = E(Q(t1)),  E(Q) = Q_nn,
///
/// along matrix trajectories built from rank-one state/input components.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "conecert/numerics.h"
#include "conecert/rankone.h"

namespace conecert {

struct ControllabilityResult {
  bool controllable;
  int rank;
  Eigen::MatrixXd kalman;  // [B, AB, ..., A^{n-1} B]
};

ControllabilityResult controllability_rank(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// Unit w with w^T [B, AB, ...] = 0, or nullopt when (A, B) is controllable.
std::optional<Eigen::VectorXd> uncontrollable_direction(const Eigen::MatrixXd& A,
                                                        const Eigen::MatrixXd& B);

struct Gramian {
  SymMatrix W;
  double horizon;
  double condition;  // lambda_max / lambda_min, +inf when singular
};

/// W(t1) = int_0^t1 exp(A s) B B^T exp(A^T s) ds by composite Simpson on
/// `steps` cells (rounded up to an even number, at least 512).
Gramian controllability_gramian(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double t1,
                                int steps = 512);

struct SteeringInput {
  Trajectory<Eigen::VectorXd> u;
  double endpoint_error;     // ||x(t1) - x1|| of the simulated trajectory
  double gramian_condition;
};

/// u(t) = B^T exp(A^T (t1 - t)) W^{-1} (x1 - exp(A T) x0) on the grid, with T
/// the grid length. Throws std::domain_error when cond(W) > 1e12 and
/// std::runtime_error when the simulated endpoint misses x1 by more than
/// 1e-5 (1 + ||x1||).
SteeringInput min_energy_input(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                               const Eigen::VectorXd& x0, const Eigen::VectorXd& x1,
                               const TimeGrid& grid);

struct SteeringPlan {
  SymMatrix X0;
  SymMatrix X1;
  std::vector<Eigen::VectorXd> starts;   // spectral factors of X0, zero-padded
  std::vector<Eigen::VectorXd> targets;  // spectral factors of X1, zero-padded
  std::vector<Trajectory<Eigen::VectorXd>> inputs;
  MatrixTrajectory Q{TimeGrid(0.0, 1.0, 1), {}, 0, 0};
  double start_error = 0.0;  // ||Q_nn(t0) - X0||_F
  double end_error = 0.0;    // ||Q_nn(t1) - X1||_F
  double tolerance = 0.0;    // 1e-5 (1 + ||X1||_F)
};

/// Pairs the spectral factors of X0 and X1 in descending eigenvalue order
/// and steers each pair with min_energy_input. Throws
/// NotPositiveSemidefinite on indefinite endpoints and std::runtime_error
/// when an endpoint error exceeds the tolerance.
SteeringPlan psd_steer(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const SymMatrix& X0,
                       const SymMatrix& X1, const TimeGrid& grid);

struct KControllabilityReport {
  bool controllable = false;
  int rank = 0;
  std::vector<double> endpoint_errors;  // max of start/end error per trial
  std::vector<double> tolerances;
  bool all_within = false;
  std::optional<Eigen::VectorXd> obstruction;  // left null vector of the Kalman matrix
  double obstruction_residual = 0.0;           // ||w^T [B, AB, ...]||
};

/// Steers `trials` random PSD pairs on [0, 1] when (A, B) is controllable;
/// otherwise reports the obstruction.
KControllabilityReport verify_k_controllability(const Eigen::MatrixXd& A,
                                                const Eigen::MatrixXd& B, int trials,
                                                std::uint64_t seed);

}  // namespace conecert
