#pragma once

/// @file
/// Rank-one decomposition of PSD matrix trajectories Q(t) in S_+^{n+m} that
/// satisfy the matrix dynamics
///
///   d/dt Q_nn = A Q_nn + B Q_mn + (A Q_nn + B Q_mn)^T,
///
/// into n components (x_i, u_i) with dx_i/dt = A x_i + B u_i and m
/// components with x_i = 0, plus the forward direction (synthesis from
/// component trajectories).
///
/// Decomposition, per constant-rank segment of Q_nn:
///   R = pinv(Q_nn) Q_nm,
///   dX/dt = (A + B R^T) X,  X(start) = sqrtm(Q_nn(start)),
///   x_i = X e_i, u_i = R^T X e_i,
/// and the remaining m components are spectral factors of
/// Q_mm - R^T Q_nn R. Segments are stitched with an orthogonal Procrustes
/// alignment of X at each junction.

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "conecert/numerics.h"

namespace conecert {

/// Samples of Q(t) on a grid with the (n, m) block split.
struct MatrixTrajectory {
  TimeGrid grid;
  std::vector<SymMatrix> values;
  int n = 0;
  int m = 0;

  int dim() const { return n + m; }
  /// Shapes, sample count and per-sample PSD (lambda_min >= -1e-8 (1 + ||Q||_F)).
  void validate() const;
  double max_norm() const;
};

/// Thrown when a trajectory is not a solution of the matrix dynamics.
class DynamicsViolation : public std::runtime_error {
 public:
  DynamicsViolation(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Thrown when a matrix that must be PSD is not.
class NotPositiveSemidefinite : public std::domain_error {
 public:
  NotPositiveSemidefinite(const std::string& what, double lambda_min)
      : std::domain_error(what), lambda_min_(lambda_min) {}
  double lambda_min() const { return lambda_min_; }

 private:
  double lambda_min_;
};

struct ImageInclusion {
  bool holds;
  double residual;  // ||Q_nn pinv(Q_nn) Q_nm - Q_nm||_F / (1 + ||Q_nm||_F)
};

/// Im(Q_nm) within Im(Q_nn) for PSD Q. Throws NotPositiveSemidefinite when
/// lambda_min(Q) < -1e-8 (1 + ||Q||_F).
ImageInclusion image_inclusion_check(const SymMatrix& Q, int n, int m, double tol = 1e-7);

struct Segment {
  int begin;  // first sample index (inclusive)
  int end;    // last sample index (inclusive)
  int rank;
};

struct RankSegmentation {
  std::vector<int> ranks;       // rank of Q_nn per sample
  std::vector<Segment> segments;
  std::vector<int> boundaries;  // isolated samples between segments
};

/// Maximal runs of constant rank(Q_nn). A run of a single sample is a
/// boundary point rather than a segment. Rank uses the global cutoff
/// relative to the largest ||Q_nn||_2 on the trajectory.
RankSegmentation rank_segments(const MatrixTrajectory& traj);

/// Integral-form residual of the matrix dynamics: for each pair of cells,
/// ||Q_nn(t_{k+2}) - Q_nn(t_k) - Simpson(L(Q))||_F / (2h), relative to
/// 1 + max ||Q||_F; the maximum over the grid.
double dynamics_residual(const MatrixTrajectory& traj, const Eigen::MatrixXd& A,
                         const Eigen::MatrixXd& B);

struct Component {
  std::vector<Eigen::VectorXd> x;  // per sample, length n
  std::vector<Eigen::VectorXd> u;  // per sample, length m
  bool zero_state = false;
};

struct RankOneDecomposition {
  std::vector<Component> components;  // n state components, then m zero-state ones
  RankSegmentation segmentation;
  double reconstruction_error = 0.0;  // max_k ||sum z z^T - Q_k||_F
  double max_ode_residual = 0.0;      // 5-point central differences, away from boundaries
  std::vector<double> ode_residuals;  // per component (zero for zero-state ones)
  std::vector<double> stitching_errors;  // ||X(t*+) U - X(t*-)||_F per junction
  double schur_min_eigenvalue = 0.0;  // min over samples of lambda_min(Q_mm - R^T Q_nn R)
  double input_residual = 0.0;        // dynamics_residual of the input
};

struct DecomposeOptions {
  double dynamics_tol = 1e-5;
  double schur_tol = 1e-7;
  int boundary_exclusion = 3;  // samples skipped around junctions for ODE residuals
};

/// Throws DynamicsViolation or NotPositiveSemidefinite on invalid input.
RankOneDecomposition decompose(const MatrixTrajectory& traj, const Eigen::MatrixXd& A,
                               const Eigen::MatrixXd& B, const DecomposeOptions& options = {});

/// Integrates each dx_i/dt = A x_i + B u_i (inputs interpolated between
/// samples) and sums the outer products (x_i; u_i)(x_i; u_i)^T.
MatrixTrajectory synthesize_Q(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              const std::vector<Eigen::VectorXd>& x_inits,
                              const std::vector<Trajectory<Eigen::VectorXd>>& u_signals,
                              const TimeGrid& grid);

/// State trajectory of one component, as used by synthesize_Q.
Trajectory<Eigen::VectorXd> simulate_component(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                               const Eigen::VectorXd& x0,
                                               const Trajectory<Eigen::VectorXd>& u);

}  // namespace conecert
