#pragma once

/// @file
/// Linear-conic certificates on the nonnegative orthant and the PSD cone.
///
/// Given a linear map L from a cone K into X and a cost functional m on K,
/// a certificate is a dual element p with <p, L(z)> <= <m, z> for all z in K.
/// When none exists, a kernel witness z0 in K with L(z0) = 0 and
/// <m, z0> < 0 refutes it. On the orthant both sides are decided by linear
/// programming; on the PSD cone the certificate search is a first-order
/// eigenvalue minimization and the outcome is a trichotomy.

#include <cstdint>
#include <optional>
#include <variant>

#include <Eigen/Dense>

#include "conecert/numerics.h"

namespace conecert {

enum class ConeKind { kOrthant, kPsd };

struct ConeId {
  ConeKind kind;
  int dim;

  static ConeId Orthant(int d);
  static ConeId Psd(int d);
};

using ConeElement = std::variant<Eigen::VectorXd, SymMatrix>;

inline constexpr double kCertificateTol = 1e-8;

/// z in K up to tol: min entry >= -tol (orthant) or lambda_min >= -tol (PSD).
/// Throws std::invalid_argument on a shape or kind mismatch.
bool cone_contains(const ConeId& cone, const ConeElement& z, double tol = kCertificateTol);

/// z in int(K) with margin: min entry > tol or lambda_min > tol.
bool cone_contains_strict(const ConeId& cone, const ConeElement& z, double tol = kCertificateTol);

// ---------------------------------------------------------------------------
// Orthant.

/// L maps R^{z_dim} -> R^{x_dim} (L is x_dim x z_dim), m in R^{z_dim}.
struct OrthantProblem {
  Eigen::MatrixXd L;
  Eigen::VectorXd m;

  int x_dim() const { return static_cast<int>(L.rows()); }
  int z_dim() const { return static_cast<int>(L.cols()); }
  void validate() const;
};

struct OrthantCertificate {
  Eigen::VectorXd p;
  Eigen::VectorXd slack;  // m - L^T p, entrywise >= -kCertificateTol
};

struct OrthantWitness {
  Eigen::VectorXd z;  // z >= 0, L z = 0, ||z||_1 = 1
  double objective;   // <m, z>
};

struct KernelMinimum {
  double value;  // +infinity when the normalized kernel slice is empty
  std::optional<OrthantWitness> witness;
};

struct StrictOrthantResult {
  bool feasible;
  double margin;  // optimal epsilon in L^T p + epsilon 1 <= m, epsilon <= 1
  std::optional<OrthantCertificate> certificate;
};

/// Finds p with L^T p <= m (two-phase simplex). Returns nullopt when the
/// program is infeasible, or when it is only feasible within the simplex
/// tolerance and the recomputed slack m - L^T p is below -1e-8.
std::optional<OrthantCertificate> orthant_certificate(const OrthantProblem& problem);

/// min <m, z> over {z >= 0, L z = 0, 1^T z = 1}.
KernelMinimum orthant_kernel_minimum(const OrthantProblem& problem);

/// Maximizes the uniform margin epsilon; feasible iff epsilon > 1e-8.
StrictOrthantResult orthant_certificate_strict(const OrthantProblem& problem);

/// L(R_+^{z_dim}) == R^{x_dim}, tested on every signed basis vector.
bool orthant_surjectivity(const Eigen::MatrixXd& L);

// ---------------------------------------------------------------------------
// PSD cone.

/// Decides existence of symmetric P with U^T P V + V^T P U <= C, where
/// L(Q) = U Q V^T + V Q U^T maps S^{U.cols()} to S^{U.rows()}.
struct PsdProblem {
  Eigen::MatrixXd U;
  Eigen::MatrixXd V;
  SymMatrix C;

  int x_dim() const { return static_cast<int>(U.rows()); }
  int z_dim() const { return static_cast<int>(U.cols()); }
  void validate() const;

  /// Adjoint map P -> U^T P V + V^T P U.
  SymMatrix adjoint(const SymMatrix& P) const;
  /// Forward map Q -> U Q V^T + V Q U^T.
  SymMatrix forward(const SymMatrix& Q) const;
  /// lambda_max(U^T P V + V^T P U - C).
  double phi(const SymMatrix& P) const;
};

struct PsdCertificate {
  SymMatrix P;
  Eigen::VectorXd slack;  // eigenvalues of C - U^T P V - V^T P U, ascending
  double phi;             // -slack.minCoeff()
};

struct PsdWitness {
  SymMatrix Z;           // Z >= 0, tr Z = 1
  double objective;      // tr(C Z) < 0
  double map_residual;   // ||L(Z)||_F
};

enum class PsdStatus { kFeasible, kInfeasible, kUndecided };

struct PsdResult {
  PsdStatus status = PsdStatus::kUndecided;
  std::optional<PsdCertificate> certificate;
  std::optional<PsdWitness> witness;
  double best_phi = 0.0;
  int iterations = 0;
};

struct PsdOptions {
  int restarts = 5;
  int iterations = 5000;
  std::uint64_t seed = 0;
  double feasibility_tol = 1e-6;  // accept P when phi(P) <= this
  double witness_tol = 1e-6;      // witness needs tr(C Z) < -this
  double level = -1e-9;           // target level for the step rule
  int refine_iterations = 20000;  // deep-cut ellipsoid steps after the restarts
};

/// Searches for a rank-one kernel witness first (exact, over ker U and
/// ker V), then minimizes phi by subgradient steps with random restarts.
/// When the restarts end above 1e-8, a deep-cut ellipsoid method started
/// on a ball around the best iterate continues the minimization.
PsdResult psd_certificate(const PsdProblem& problem, const PsdOptions& options = {});

/// Best rank-one kernel witness, if one with tr(C Z) < -tol exists.
std::optional<PsdWitness> psd_rank_one_witness(const PsdProblem& problem, double tol = 1e-6);

}  // namespace conecert
