#pragma once

/// @file
/// The non-strict KYP lemma for dx/dt = A x + B u and a symmetric M of
/// dimension n + m, as four independent checkers:
///
///   LMI:        exists P = P^T with M + U^T P V + V^T P U <= 0,
///               U = (A B), V = (I 0);
///   pointwise:  (x, u)^* M (x, u) <= 0 whenever i w x = A x + B u;
///   IQC:        int (x, u)^T M (x, u) dt <= 0 along L2 trajectories;
///   frequency:  ((i w I - A)^{-1} B; I)^* M ((i w I - A)^{-1} B; I) <= 0,
///
/// together with a cross-check that runs all of them on one instance.

#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "conecert/certificates.h"
#include "conecert/numerics.h"

namespace conecert {

/// Tolerance for the frequency-domain and pointwise forms.
inline constexpr double kFormTol = 1e-7;

struct KypInstance {
  Eigen::MatrixXd A;  // n x n
  Eigen::MatrixXd B;  // n x m
  SymMatrix M;        // (n + m) x (n + m)

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  /// Throws std::invalid_argument on inconsistent shapes or non-finite data.
  void validate() const;
  bool controllable() const;
  /// U = (A B), V = (I 0), C = -M.
  PsdProblem lmi_problem() const;
};

/// Frequencies avoiding the imaginary-axis eigenvalues of A.
class FrequencyGrid {
 public:
  /// Drops every w with |i w - lambda| < 1e-8 for an eigenvalue lambda of A,
  /// then sorts. Throws std::invalid_argument on negative or non-finite w.
  FrequencyGrid(const Eigen::MatrixXd& A, std::vector<double> omegas);

  /// w = 0 plus `points` logarithmic points over [1e-3, 1e3] (1 + ||A||_2).
  static FrequencyGrid Default(const Eigen::MatrixXd& A, int points = 200);

  const std::vector<double>& omegas() const { return omegas_; }

 private:
  std::vector<double> omegas_;
};

enum class KypStatus { kFeasible, kInfeasible, kUndecided };

struct KypLmiResult {
  KypStatus status = KypStatus::kUndecided;
  std::optional<SymMatrix> P;
  double lambda_max = 0.0;  // lambda_max(M + U^T P V + V^T P U) at the returned P
  /// Z >= 0, tr Z = 1, U Z V^T + V Z U^T = 0 and tr(M Z) > 0.
  std::optional<PsdWitness> witness;
  double best_phi = 0.0;
  int iterations = 0;
};

/// Requires (A, B) controllable (std::domain_error otherwise). Feasible
/// results satisfy lambda_max <= 1e-6.
KypLmiResult kyp_lmi(const KypInstance& inst, const PsdOptions& options = {});

struct FrequencyResult {
  bool holds = true;
  double worst_omega = 0.0;
  double worst_lambda = -std::numeric_limits<double>::infinity();
  double limit_lambda = 0.0;  // lambda_max(M_uu)
  /// Complex input attaining worst_lambda, as real and imaginary parts.
  Eigen::VectorXd worst_u_real;
  Eigen::VectorXd worst_u_imag;
};

/// Largest eigenvalue of the Hermitian form at each grid frequency, computed
/// through the real 2n x 2n system [[-A, -wI], [wI, -A]] (G_r; G_i) = (B; 0).
/// Throws std::domain_error on a singular solve.
FrequencyResult frequency_condition(const KypInstance& inst, const FrequencyGrid& grid);

/// The Hermitian form at one frequency, as its real and imaginary parts.
struct HermitianForm {
  Eigen::MatrixXd real;
  Eigen::MatrixXd imag;
};
HermitianForm frequency_form(const KypInstance& inst, double omega);

struct PointwiseWitness {
  bool at_infinity;  // the x = 0 branch
  double omega;
  Eigen::VectorXcd x;
  Eigen::VectorXcd u;
  double value;  // (x, u)^* M (x, u) with ||u|| = 1
};

struct PointwiseResult {
  bool holds = true;
  double worst = -std::numeric_limits<double>::infinity();
  std::optional<PointwiseWitness> witness;
};

/// Same quantity as frequency_condition, evaluated with complex arithmetic
/// on x = (i w I - A)^{-1} B e_j for the canonical inputs e_j.
PointwiseResult pointwise_condition(const KypInstance& inst, const FrequencyGrid& grid);

/// Thrown when the simulated state has not decayed by the end of the horizon.
class HorizonTooShort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IqcIntegral {
  double integral;  // trapezoid integral of (x, u)^T M (x, u)
  double energy;    // integral of ||u||^2
  double tail;      // ||x(horizon)||
};

/// Simulates from x(0) = 0 under the sampled input (or uses x = 0 when
/// zero_state is set) and integrates the quadratic form.
IqcIntegral iqc_integral(const KypInstance& inst, const Trajectory<Eigen::VectorXd>& u,
                         bool zero_state = false);

struct IqcResult {
  bool applicable = true;  // false when A is not Hurwitz
  bool holds = true;
  double worst_integral = -std::numeric_limits<double>::infinity();
  double worst_excess = -std::numeric_limits<double>::infinity();  // integral - tolerance
  std::vector<double> integrals;  // dynamic and zero-state branch per trial
  std::vector<double> energies;
};

/// Random smooth inputs supported on [0, horizon / 4], simulated on
/// [0, horizon]. Throws HorizonTooShort when ||x(horizon)|| > 1e-6. Holds
/// iff every integral is <= 1e-5 (1 + energy).
IqcResult iqc_trajectory_condition(const KypInstance& inst, int trials, double horizon,
                                   std::uint64_t seed, int steps = 0);

/// A horizon long enough for the state to decay: 40 / |spectral abscissa|,
/// clamped to [20, 2000].
double default_iqc_horizon(const Eigen::MatrixXd& A);

struct CrossValidation {
  bool controllable = false;
  KypLmiResult lmi;  // only run for controllable pairs
  FrequencyResult frequency;
  PointwiseResult pointwise;
  std::optional<IqcResult> iqc;  // empty when not applicable
  std::string iqc_note;
  std::vector<std::string> defects;

  bool consistent() const { return defects.empty(); }
};

/// Runs every applicable checker and records disagreements as defects.
CrossValidation cross_validate(const KypInstance& inst, const FrequencyGrid& grid, int trials,
                               std::uint64_t seed);

}  // namespace conecert
