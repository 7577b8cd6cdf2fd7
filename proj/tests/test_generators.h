#pragma once

// Random instance generators shared by the property tests and the acceptance
// binary. Every generator takes the engine by reference so a single seed
// reproduces a whole suite.

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "conecert/certificates.h"
#include "conecert/kyp.h"
#include "conecert/numerics.h"
#include "conecert/possys.h"
#include "conecert/rankone.h"
#include "conecert/steering.h"

namespace conecert::testing {

using Rng = std::mt19937_64;

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Eigen::MatrixXd normal_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                                     double sigma = 1.0) {
  std::normal_distribution<double> normal(0.0, sigma);
  return Eigen::MatrixXd::NullaryExpr(rows, cols, [&]() { return normal(rng); });
}

inline Eigen::VectorXd normal_vector(Rng& rng, Eigen::Index size) {
  return normal_matrix(rng, size, 1);
}

/// G G^T with G of size dim x rank.
inline SymMatrix random_psd(Rng& rng, int dim, int rank) {
  const Eigen::MatrixXd G = normal_matrix(rng, dim, rank);
  return SymMatrix(G * G.transpose());
}

/// Symmetric with at least one eigenvalue <= -0.1.
inline SymMatrix random_indefinite(Rng& rng, int dim) {
  const Eigen::MatrixXd Q =
      Eigen::HouseholderQR<Eigen::MatrixXd>(normal_matrix(rng, dim, dim)).householderQ();
  Eigen::VectorXd eigs = normal_vector(rng, dim).cwiseAbs();
  eigs(uniform_int(rng, 0, dim - 1)) = -uniform(rng, 0.1, 2.0);
  return SymMatrix(Q * eigs.asDiagonal() * Q.transpose());
}

/// L of size x_dim x z_dim with L(R^z_+) = R^x, and a random m.
inline OrthantProblem random_surjective_orthant(Rng& rng, int x_dim, int z_dim) {
  OrthantProblem p;
  do {
    p.L = normal_matrix(rng, x_dim, z_dim);
  } while (!orthant_surjectivity(p.L));
  p.m = normal_vector(rng, z_dim);
  return p;
}

/// Metzler A with strictly negative row sums (hence Hurwitz) and B >= 0
/// with a positive entry in every row.
inline PositiveSystem random_positive_system(Rng& rng, int n, int m) {
  PositiveSystem sys;
  sys.A = Eigen::MatrixXd::NullaryExpr(n, n, [&]() { return uniform(rng, 0.0, 1.0); });
  for (int i = 0; i < n; ++i) {
    sys.A(i, i) = 0.0;
    sys.A(i, i) = -(sys.A.row(i).sum() + uniform(rng, 0.2, 2.0));
  }
  sys.B = Eigen::MatrixXd::NullaryExpr(n, m, [&]() {
    return uniform(rng, 0.0, 1.0) < 0.3 ? 0.0 : uniform(rng, 0.0, 1.0);
  });
  for (int i = 0; i < n; ++i) {
    if (sys.B.row(i).maxCoeff() <= 0.0) sys.B(i, uniform_int(rng, 0, m - 1)) = uniform(rng, 0.1, 1.0);
  }
  return sys;
}

/// Smooth nonnegative input on the grid: squared trigonometric sums.
inline Trajectory<Eigen::VectorXd> random_nonnegative_input(Rng& rng, int m, const TimeGrid& grid) {
  const Eigen::VectorXd amp = normal_vector(rng, m);
  const Eigen::VectorXd freq = normal_vector(rng, m).cwiseAbs() * 3.0;
  const Eigen::VectorXd phase = normal_vector(rng, m);
  const Eigen::VectorXd decay = normal_vector(rng, m).cwiseAbs();
  return sample<Eigen::VectorXd>(grid, [&](double t) {
    Eigen::VectorXd u(m);
    for (int j = 0; j < m; ++j) {
      const double s = amp(j) * std::sin(freq(j) * t + phase(j)) + 0.3;
      u(j) = s * s * std::exp(-decay(j) * t);
    }
    return u;
  });
}

/// Controllable pair whose Gramian on [0, 1] has condition number <= max_cond.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> random_controllable_pair(Rng& rng, int n, int m,
                                                                            double max_cond = 1e8) {
  for (;;) {
    Eigen::MatrixXd A = normal_matrix(rng, n, n);
    Eigen::MatrixXd B = normal_matrix(rng, n, m);
    if (!controllability_rank(A, B).controllable) continue;
    if (controllability_gramian(A, B, 1.0).condition > max_cond) continue;
    return {A, B};
  }
}

/// M = -(U^T P0 V + V^T P0 U) - S with S = G G^T of random rank, so P0 is a
/// certificate.
inline KypInstance random_feasible_kyp(Rng& rng, int n, int m) {
  auto [A, B] = random_controllable_pair(rng, n, m);
  KypInstance inst{A, B, SymMatrix::Zero(n + m)};
  const PsdProblem problem = inst.lmi_problem();
  const SymMatrix P0 = SymMatrix::FromAverage(normal_matrix(rng, n, n));
  const SymMatrix S = random_psd(rng, n + m, uniform_int(rng, 0, n + m));
  inst.M = (problem.adjoint(P0) + S) * -1.0;
  return inst;
}

/// A feasible instance plus c (a a^T + b b^T), where a + i b = z0 is a
/// frequency vector at a planted grid frequency, with c chosen to put the
/// form at (w0, u0) at 0.2.
inline KypInstance random_infeasible_kyp(Rng& rng, int n, int m) {
  KypInstance inst = random_feasible_kyp(rng, n, m);
  const FrequencyGrid grid = FrequencyGrid::Default(inst.A);
  const double w0 = grid.omegas()[uniform_int(rng, 0, static_cast<int>(grid.omegas().size()) - 1)];
  const Eigen::VectorXd u0 = normal_vector(rng, m).normalized();

  // x0 = (i w0 I - A)^{-1} B u0 via the real system.
  Eigen::MatrixXd big(2 * n, 2 * n);
  big << -inst.A, -w0 * Eigen::MatrixXd::Identity(n, n), w0 * Eigen::MatrixXd::Identity(n, n),
      -inst.A;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * n);
  rhs.head(n) = inst.B * u0;
  const Eigen::VectorXd g = big.fullPivLu().solve(rhs);
  Eigen::VectorXd a(n + m), b(n + m);
  a << g.head(n), u0;
  b << g.tail(n), Eigen::VectorXd::Zero(m);

  auto form = [&](const SymMatrix& M) {
    return a.dot(M.matrix() * a) + b.dot(M.matrix() * b);
  };
  const SymMatrix bump(a * a.transpose() + b * b.transpose());
  const double base = form(inst.M);
  const double gain = form(bump);
  const double c = (0.2 - base) / gain;
  inst.M = inst.M + bump * c;
  return inst;
}

struct SynthesizedTrajectory {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  std::vector<Eigen::VectorXd> starts;
  std::vector<Trajectory<Eigen::VectorXd>> inputs;
  MatrixTrajectory Q;
};

/// n + m components with random initial states and smooth trigonometric
/// inputs; A has entries of variance 1 / n.
inline SynthesizedTrajectory random_synthesized(Rng& rng, int n, int m, const TimeGrid& grid) {
  SynthesizedTrajectory out{normal_matrix(rng, n, n) / std::sqrt(static_cast<double>(n)),
                            normal_matrix(rng, n, m), {}, {}, {grid, {}, n, m}};
  for (int k = 0; k < n + m; ++k) {
    out.starts.push_back(normal_vector(rng, n));
    const Eigen::MatrixXd c = normal_matrix(rng, m, 3);
    const Eigen::VectorXd w = normal_vector(rng, 2) * 2.0;
    out.inputs.push_back(sample<Eigen::VectorXd>(grid, [&](double t) -> Eigen::VectorXd {
      return c.col(0) + c.col(1) * std::sin(w(0) * t) + c.col(2) * std::cos(w(1) * t);
    }));
  }
  out.Q = synthesize_Q(out.A, out.B, out.starts, out.inputs, grid);
  return out;
}

}  // namespace conecert::testing
