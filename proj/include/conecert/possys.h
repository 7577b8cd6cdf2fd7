#pragma once

/// @file
/// L1-gain certificates for positive systems dx/dt = A x + B u with A Metzler
/// and B >= 0, and dissipation-inequality checks with linear supply rates
/// along simulated trajectories.

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "conecert/certificates.h"
#include "conecert/numerics.h"

namespace conecert {

inline constexpr double kSignTol = 1e-12;

struct PositiveSystem {
  Eigen::MatrixXd A;  // n x n, Metzler
  Eigen::MatrixXd B;  // n x m, entrywise >= 0

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  /// Throws std::invalid_argument on shape errors, a non-Metzler A or a
  /// negative entry in B.
  void validate() const;
};

struct GainCertificate {
  Eigen::VectorXd p;            // entrywise > 0
  double gamma;
  Eigen::VectorXd state_slack;  // -(A^T p + 1_n)
  Eigen::VectorXd input_slack;  // gamma 1_m - B^T p
};

/// w(x, u) = c_x^T x + c_u^T u.
struct SupplyRate {
  Eigen::VectorXd cx;
  Eigen::VectorXd cu;

  double operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    return cx.dot(x) + cu.dot(u);
  }
  /// gamma 1_m^T u - 1_n^T x.
  static SupplyRate L1Gain(int n, int m, double gamma);
};

bool is_metzler(const Eigen::MatrixXd& A, double tol = kSignTol);

/// Decided by the LP: exists p >= 1 with A p <= -1. Throws if A is not
/// Metzler.
bool is_hurwitz_metzler(const Eigen::MatrixXd& A);

/// Largest real part of the eigenvalues of A.
double spectral_abscissa(const Eigen::MatrixXd& A);

/// Every row of B has a positive entry, i.e. B 1 > 0.
bool has_positive_input_direction(const Eigen::MatrixXd& B);

/// max_j (-1^T A^{-1} B)_j. Throws std::domain_error if A is not Hurwitz.
double exact_l1_gain(const PositiveSystem& sys);

/// The L1 problem as an orthant certificate problem over z = (x, u):
/// L = [A B], m = (-1_n, gamma 1_m).
OrthantProblem l1_orthant_problem(const PositiveSystem& sys, double gamma);

/// Certificate for gain bound gamma, with p the minimal solution
/// -(1^T A^{-1})^T; nullopt when gamma is below the exact gain.
std::optional<GainCertificate> l1_certificate(const PositiveSystem& sys, double gamma);

/// Bisection on the feasibility of l1_certificate.
double bisect_l1_gain(const PositiveSystem& sys, double rel_tol = 1e-8);

struct DissipationReport {
  bool holds = true;
  /// Per grid cell: integral of w minus the change of V = p^T x.
  std::vector<double> margins;
  std::vector<double> tolerances;
  double storage_change = 0.0;
  double supply_integral = 0.0;
  double total_margin = 0.0;
  double quad_tol = 0.0;
  double min_state = 0.0;
  Trajectory<Eigen::VectorXd> states{TimeGrid(0.0, 1.0, 1), {}};
};

/// Simulates dx/dt = A x + B u from x0 with the sampled input and checks
/// V(x(t1)) - V(x(t0)) <= int w dt + quad_tol cell by cell and in total.
/// Throws std::domain_error when a state component drops below -1e-8.
DissipationReport simulate_and_check_dissipation(const PositiveSystem& sys,
                                                 const SupplyRate& supply,
                                                 const Eigen::VectorXd& p,
                                                 const Trajectory<Eigen::VectorXd>& u,
                                                 const Eigen::VectorXd& x0);

/// ||x||_1 / ||u||_1 by trapezoid quadrature, zero initial state.
double empirical_l1_ratio(const PositiveSystem& sys, const Trajectory<Eigen::VectorXd>& u);

}  // namespace conecert
