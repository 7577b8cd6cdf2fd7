#include "conecert/possys.h"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "conecert/lp.h"

namespace conecert {

void PositiveSystem::validate() const {
  if (A.rows() < 1 || A.rows() != A.cols()) {
    throw std::invalid_argument("PositiveSystem: A must be square and non-empty");
  }
  if (B.rows() != A.rows() || B.cols() < 1) {
    throw std::invalid_argument("PositiveSystem: B must have n rows and at least one column");
  }
  if (!A.allFinite() || !B.allFinite()) {
    throw std::invalid_argument("PositiveSystem: non-finite data");
  }
  if (!is_metzler(A)) throw std::invalid_argument("PositiveSystem: A is not Metzler");
  if (B.minCoeff() < -kSignTol) {
    throw std::invalid_argument("PositiveSystem: B has a negative entry");
  }
}

SupplyRate SupplyRate::L1Gain(int n, int m, double gamma) {
  return {-Eigen::VectorXd::Ones(n), Eigen::VectorXd::Constant(m, gamma)};
}

bool is_metzler(const Eigen::MatrixXd& A, double tol) {
  if (A.rows() != A.cols()) throw std::invalid_argument("is_metzler: A is not square");
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      if (i != j && A(i, j) < -tol) return false;
    }
  }
  return true;
}

bool is_hurwitz_metzler(const Eigen::MatrixXd& A) {
  if (!is_metzler(A)) throw std::invalid_argument("is_hurwitz_metzler: A is not Metzler");
  // p = 1 + q, q >= 0:  A q + s = -1 - A 1,  s >= 0.
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd lhs(n, 2 * n);
  lhs << A, Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd rhs = -Eigen::VectorXd::Ones(n) - A * Eigen::VectorXd::Ones(n);
  return lp::feasible(lhs, rhs);
}

double spectral_abscissa(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  return es.eigenvalues().real().maxCoeff();
}

bool has_positive_input_direction(const Eigen::MatrixXd& B) {
  return (B.rowwise().maxCoeff().array() > 0.0).all();
}

namespace {

// -(1^T A^{-1})^T, the componentwise-minimal solution of A^T p <= -1.
Eigen::VectorXd minimal_certificate(const Eigen::MatrixXd& A) {
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(A.rows());
  return -A.transpose().fullPivLu().solve(ones);
}

}  // namespace

double exact_l1_gain(const PositiveSystem& sys) {
  sys.validate();
  if (!is_hurwitz_metzler(sys.A)) throw std::domain_error("exact_l1_gain: A is not Hurwitz");
  const Eigen::VectorXd p = minimal_certificate(sys.A);
  return (sys.B.transpose() * p).maxCoeff();
}

OrthantProblem l1_orthant_problem(const PositiveSystem& sys, double gamma) {
  const int n = sys.n();
  const int m = sys.m();
  OrthantProblem problem;
  problem.L.resize(n, n + m);
  problem.L << sys.A, sys.B;
  problem.m.resize(n + m);
  problem.m << -Eigen::VectorXd::Ones(n), Eigen::VectorXd::Constant(m, gamma);
  return problem;
}

std::optional<GainCertificate> l1_certificate(const PositiveSystem& sys, double gamma) {
  sys.validate();
  if (!(gamma > 0.0)) throw std::invalid_argument("l1_certificate: gamma must be positive");
  if (!has_positive_input_direction(sys.B)) {
    throw std::invalid_argument("l1_certificate: some row of B has no positive entry");
  }
  if (!is_hurwitz_metzler(sys.A)) throw std::domain_error("l1_certificate: A is not Hurwitz");

  if (!orthant_certificate(l1_orthant_problem(sys, gamma))) return std::nullopt;

  GainCertificate cert;
  cert.gamma = gamma;
  cert.p = minimal_certificate(sys.A);
  cert.state_slack = -(sys.A.transpose() * cert.p + Eigen::VectorXd::Ones(sys.n()));
  cert.input_slack = Eigen::VectorXd::Constant(sys.m(), gamma) - sys.B.transpose() * cert.p;
  if (cert.input_slack.minCoeff() < -kCertificateTol || cert.p.minCoeff() <= 0.0) {
    // The LP accepted gamma within its tolerance but the minimal p does not.
    return std::nullopt;
  }
  return cert;
}

double bisect_l1_gain(const PositiveSystem& sys, double rel_tol) {
  double hi = 1.0;
  while (!l1_certificate(sys, hi)) {
    hi *= 2.0;
    if (hi > 1e15) throw std::runtime_error("bisect_l1_gain: no feasible bound found");
  }
  double lo = 0.0;
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (l1_certificate(sys, mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

namespace {

Trajectory<Eigen::VectorXd> simulate(const PositiveSystem& sys,
                                     const Trajectory<Eigen::VectorXd>& u,
                                     const Eigen::VectorXd& x0) {
  const SampledSignal<Eigen::VectorXd> input(u);
  auto field = [&](double t, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return sys.A * x + sys.B * input(t);
  };
  return ode_solve(field, x0, u.grid, false).trajectory;
}

}  // namespace

DissipationReport simulate_and_check_dissipation(const PositiveSystem& sys,
                                                 const SupplyRate& supply,
                                                 const Eigen::VectorXd& p,
                                                 const Trajectory<Eigen::VectorXd>& u,
                                                 const Eigen::VectorXd& x0) {
  sys.validate();
  if (p.size() != sys.n() || x0.size() != sys.n() || supply.cx.size() != sys.n() ||
      supply.cu.size() != sys.m()) {
    throw std::invalid_argument("simulate_and_check_dissipation: dimension mismatch");
  }
  if (x0.minCoeff() < 0.0) {
    throw std::invalid_argument("simulate_and_check_dissipation: x0 must be nonnegative");
  }
  for (const auto& uk : u.values) {
    if (uk.size() != sys.m()) {
      throw std::invalid_argument("simulate_and_check_dissipation: input has wrong dimension");
    }
    if (uk.minCoeff() < 0.0) {
      throw std::invalid_argument("simulate_and_check_dissipation: input must be nonnegative");
    }
  }

  DissipationReport report;
  report.states = simulate(sys, u, x0);
  const auto& xs = report.states.values;
  const TimeGrid& grid = u.grid;

  report.min_state = x0.minCoeff();
  for (const auto& x : xs) report.min_state = std::min(report.min_state, x.minCoeff());
  if (report.min_state < -1e-8) {
    throw std::domain_error("simulate_and_check_dissipation: state left the nonnegative orthant");
  }

  Eigen::VectorXd w(grid.samples());
  for (int k = 0; k < grid.samples(); ++k) w(k) = supply(xs[k], u.values[k]);
  report.supply_integral = trapz(grid, w);
  report.storage_change = p.dot(xs.back()) - p.dot(xs.front());
  report.total_margin = report.supply_integral - report.storage_change;
  report.quad_tol = 1e-4 * (1.0 + std::abs(report.supply_integral));
  report.holds = report.total_margin >= -report.quad_tol;

  const double h = grid.step();
  report.margins.reserve(static_cast<std::size_t>(grid.steps()));
  report.tolerances.reserve(static_cast<std::size_t>(grid.steps()));
  for (int k = 0; k < grid.steps(); ++k) {
    const double cell_supply = 0.5 * h * (w(k) + w(k + 1));
    const double margin = cell_supply - (p.dot(xs[k + 1]) - p.dot(xs[k]));
    const double tol = 1e-4 * (1.0 + std::abs(cell_supply));
    report.margins.push_back(margin);
    report.tolerances.push_back(tol);
    if (margin < -tol) report.holds = false;
  }
  return report;
}

double empirical_l1_ratio(const PositiveSystem& sys, const Trajectory<Eigen::VectorXd>& u) {
  sys.validate();
  const auto xs = simulate(sys, u, Eigen::VectorXd::Zero(sys.n()));
  Eigen::VectorXd xn(u.grid.samples()), un(u.grid.samples());
  for (int k = 0; k < u.grid.samples(); ++k) {
    xn(k) = xs.values[k].cwiseAbs().sum();
    un(k) = u.values[k].cwiseAbs().sum();
  }
  return trapz(u.grid, xn) / trapz(u.grid, un);
}

}  // namespace conecert
