#include "conecert/steering.h"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace conecert {

namespace {

void check_pair(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.rows() < 1 || A.rows() != A.cols() || B.rows() != A.rows() || B.cols() < 1) {
    throw std::invalid_argument("steering: A must be n x n and B n x m");
  }
  if (!A.allFinite() || !B.allFinite()) throw std::invalid_argument("steering: non-finite data");
}

// Factors sqrt(lambda) v of a PSD matrix, descending lambda, largest entry of
// each v positive. Eigenvalues below the rank cutoff are dropped.
std::vector<Eigen::VectorXd> spectral_factors(const SymMatrix& X) {
  const SymEig<double> eig = sym_eig(X);
  const double lmin = eig.eigenvalues(0);
  if (lmin < -default_psd_tolerance(X)) {
    throw NotPositiveSemidefinite("psd_steer: endpoint is not positive semidefinite", lmin);
  }
  const double cut = kRankCutoff * std::max(eig.eigenvalues(X.dim() - 1), 0.0);
  std::vector<Eigen::VectorXd> out;
  for (Eigen::Index i = X.dim() - 1; i >= 0; --i) {
    const double lambda = eig.eigenvalues(i);
    if (!(lambda > cut) || lambda <= 0.0) continue;
    Eigen::VectorXd v = eig.eigenvectors.col(i);
    Eigen::Index big = 0;
    v.cwiseAbs().maxCoeff(&big);
    if (v(big) < 0) v = -v;
    out.push_back(std::sqrt(lambda) * v);
  }
  return out;
}

}  // namespace

ControllabilityResult controllability_rank(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  check_pair(A, B);
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  ControllabilityResult out;
  out.kalman.resize(n, n * m);
  Eigen::MatrixXd block = B;
  for (Eigen::Index k = 0; k < n; ++k) {
    out.kalman.middleCols(k * m, m) = block;
    block = A * block;
  }
  out.rank = numerical_rank(out.kalman);
  out.controllable = out.rank == n;
  return out;
}

std::optional<Eigen::VectorXd> uncontrollable_direction(const Eigen::MatrixXd& A,
                                                        const Eigen::MatrixXd& B) {
  const ControllabilityResult ctrb = controllability_rank(A, B);
  if (ctrb.controllable) return std::nullopt;
  const Eigen::MatrixXd left = null_space(ctrb.kalman.transpose());
  if (left.cols() == 0) return std::nullopt;
  return Eigen::VectorXd(left.col(0).normalized());
}

Gramian controllability_gramian(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double t1,
                                int steps) {
  check_pair(A, B);
  if (!(t1 > 0.0) || !std::isfinite(t1)) {
    throw std::invalid_argument("controllability_gramian: horizon must be positive");
  }
  int cells = std::max(steps, 512);
  if (cells % 2 == 1) ++cells;
  const double h = t1 / cells;
  const Eigen::MatrixXd step = expm(A * h);

  const Eigen::Index n = A.rows();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd f = B;
  for (int k = 0; k <= cells; ++k) {
    const double w = (k == 0 || k == cells) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    sum.noalias() += w * (f * f.transpose());
    f = step * f;
  }
  Gramian out{SymMatrix::FromAverage(sum * (h / 3.0)), t1, 0.0};
  const SymEig<double> eig = sym_eig(out.W);
  const double lo = eig.eigenvalues(0);
  const double hi = eig.eigenvalues(n - 1);
  out.condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  return out;
}

SteeringInput min_energy_input(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                               const Eigen::VectorXd& x0, const Eigen::VectorXd& x1,
                               const TimeGrid& grid) {
  check_pair(A, B);
  if (x0.size() != A.rows() || x1.size() != A.rows()) {
    throw std::invalid_argument("min_energy_input: endpoint has wrong dimension");
  }
  const double horizon = grid.length();
  const Gramian gram = controllability_gramian(A, B, horizon, grid.steps());
  if (!(gram.condition <= 1e12)) {
    throw std::domain_error("min_energy_input: Gramian condition number exceeds 1e12 "
                            "(uncontrollable pair or horizon too short)");
  }
  const Eigen::LDLT<Eigen::MatrixXd> solver(gram.W.matrix());

  std::vector<Eigen::MatrixXd> gains;
  gains.reserve(static_cast<std::size_t>(grid.samples()));
  for (int k = 0; k < grid.samples(); ++k) {
    gains.push_back(B.transpose() * expm(A.transpose() * (grid.t1() - grid.time(k))));
  }
  auto build = [&](const Eigen::VectorXd& eta) {
    Trajectory<Eigen::VectorXd> u{grid, {}};
    u.values.reserve(gains.size());
    for (const auto& g : gains) u.values.push_back(g * eta);
    return u;
  };

  const double tol = 1e-5 * (1.0 + x1.norm());
  Eigen::VectorXd eta = solver.solve(x1 - expm(A * horizon) * x0);
  SteeringInput out{build(eta), 0.0, gram.condition};
  // Correction passes on the endpoint miss.
  for (int pass = 0; pass < 4; ++pass) {
    const Eigen::VectorXd miss = x1 - simulate_component(A, B, x0, out.u).values.back();
    out.endpoint_error = miss.norm();
    if (out.endpoint_error <= 1e-13 * (1.0 + x1.norm()) || pass == 3) break;
    eta += solver.solve(miss);
    out.u = build(eta);
  }
  if (out.endpoint_error > tol) {
    throw std::runtime_error("min_energy_input: endpoint tolerance unreached");
  }
  return out;
}

SteeringPlan psd_steer(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const SymMatrix& X0,
                       const SymMatrix& X1, const TimeGrid& grid) {
  check_pair(A, B);
  const Eigen::Index n = A.rows();
  if (X0.dim() != n || X1.dim() != n) {
    throw std::invalid_argument("psd_steer: endpoints must be n x n");
  }
  SteeringPlan plan;
  plan.X0 = X0;
  plan.X1 = X1;
  plan.starts = spectral_factors(X0);
  plan.targets = spectral_factors(X1);
  const std::size_t count = std::max(plan.starts.size(), plan.targets.size());
  plan.starts.resize(count, Eigen::VectorXd::Zero(n));
  plan.targets.resize(count, Eigen::VectorXd::Zero(n));

  const Eigen::MatrixXd drift = expm(A * grid.length());
  for (std::size_t i = 0; i < count; ++i) {
    // x x^T does not see the sign of x; take the cheaper target.
    if ((drift * plan.starts[i]).dot(plan.targets[i]) < 0.0) plan.targets[i] = -plan.targets[i];
    plan.inputs.push_back(min_energy_input(A, B, plan.starts[i], plan.targets[i], grid).u);
  }
  plan.Q = synthesize_Q(A, B, plan.starts, plan.inputs, grid);
  const int n_int = static_cast<int>(n);
  plan.start_error = (plan.Q.values.front().upper_left(n_int) - X0.matrix()).norm();
  plan.end_error = (plan.Q.values.back().upper_left(n_int) - X1.matrix()).norm();
  plan.tolerance = 1e-5 * (1.0 + X1.norm());
  if (plan.start_error > plan.tolerance || plan.end_error > plan.tolerance) {
    throw std::runtime_error("psd_steer: endpoint tolerance unreached");
  }
  return plan;
}

KControllabilityReport verify_k_controllability(const Eigen::MatrixXd& A,
                                                const Eigen::MatrixXd& B, int trials,
                                                std::uint64_t seed) {
  KControllabilityReport report;
  const ControllabilityResult ctrb = controllability_rank(A, B);
  report.controllable = ctrb.controllable;
  report.rank = ctrb.rank;
  if (!ctrb.controllable) {
    report.obstruction = uncontrollable_direction(A, B);
    if (report.obstruction) {
      report.obstruction_residual = (report.obstruction->transpose() * ctrb.kalman).norm();
    }
    return report;
  }

  const int n = static_cast<int>(A.rows());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> rank_dist(0, n);
  auto random_psd = [&]() {
    const int r = rank_dist(rng);
    const Eigen::MatrixXd G =
        Eigen::MatrixXd::NullaryExpr(n, r, [&]() { return normal(rng); });
    return SymMatrix(G * G.transpose());
  };

  const TimeGrid grid(0.0, 1.0, 512);
  report.all_within = true;
  for (int trial = 0; trial < trials; ++trial) {
    const SymMatrix X0 = random_psd();
    const SymMatrix X1 = random_psd();
    const double tol = 1e-5 * (1.0 + X1.norm());
    double error = std::numeric_limits<double>::infinity();
    try {
      const SteeringPlan plan = psd_steer(A, B, X0, X1, grid);
      error = std::max(plan.start_error, plan.end_error);
    } catch (const std::exception&) {
      // Counted as a failed trial.
    }
    report.endpoint_errors.push_back(error);
    report.tolerances.push_back(tol);
    if (!(error <= tol)) report.all_within = false;
  }
  return report;
}

}  // namespace conecert
