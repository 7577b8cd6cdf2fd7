#include "conecert/certificates.h"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "conecert/lp.h"

namespace conecert {

ConeId ConeId::Orthant(int d) {
  if (d < 1) throw std::invalid_argument("ConeId: dimension must be positive");
  return {ConeKind::kOrthant, d};
}

ConeId ConeId::Psd(int d) {
  if (d < 1) throw std::invalid_argument("ConeId: dimension must be positive");
  return {ConeKind::kPsd, d};
}

namespace {

// Smallest "coordinate" of z relative to the cone: min entry or lambda_min.
double cone_margin(const ConeId& cone, const ConeElement& z) {
  if (cone.kind == ConeKind::kOrthant) {
    const auto* v = std::get_if<Eigen::VectorXd>(&z);
    if (v == nullptr || v->size() != cone.dim) {
      throw std::invalid_argument("cone_contains: expected a vector of the orthant dimension");
    }
    return v->minCoeff();
  }
  const auto* s = std::get_if<SymMatrix>(&z);
  if (s == nullptr || s->dim() != cone.dim) {
    throw std::invalid_argument("cone_contains: expected a symmetric matrix of the cone dimension");
  }
  return lambda_min(*s);
}

}  // namespace

bool cone_contains(const ConeId& cone, const ConeElement& z, double tol) {
  return cone_margin(cone, z) >= -tol;
}

bool cone_contains_strict(const ConeId& cone, const ConeElement& z, double tol) {
  return cone_margin(cone, z) > tol;
}

// ---------------------------------------------------------------------------

void OrthantProblem::validate() const {
  if (L.rows() < 1 || L.cols() < 1) {
    throw std::invalid_argument("OrthantProblem: L must be non-empty");
  }
  if (m.size() != L.cols()) {
    throw std::invalid_argument("OrthantProblem: m must have one entry per column of L");
  }
  if (!L.allFinite() || !m.allFinite()) {
    throw std::invalid_argument("OrthantProblem: non-finite data");
  }
}

std::optional<OrthantCertificate> orthant_certificate(const OrthantProblem& problem) {
  problem.validate();
  const int xd = problem.x_dim();
  const int zd = problem.z_dim();
  // L^T (p+ - p-) + s = m, all of p+, p-, s >= 0.
  lp::LinearProgram program;
  program.A.resize(zd, 2 * xd + zd);
  program.A << problem.L.transpose(), -problem.L.transpose(), Eigen::MatrixXd::Identity(zd, zd);
  program.b = problem.m;
  program.c = Eigen::VectorXd::Zero(program.A.cols());
  const lp::Solution sol = lp::solve(program);
  if (sol.status == lp::Status::kInfeasible) return std::nullopt;
  if (sol.status != lp::Status::kOptimal) {
    throw std::runtime_error("orthant_certificate: phase-1 did not terminate (ill-posed input)");
  }

  OrthantCertificate cert;
  cert.p = sol.x.head(xd) - sol.x.segment(xd, xd);
  cert.slack = problem.m - problem.L.transpose() * cert.p;
  if (cert.slack.minCoeff() < -kCertificateTol) return std::nullopt;
  return cert;
}

KernelMinimum orthant_kernel_minimum(const OrthantProblem& problem) {
  problem.validate();
  const int xd = problem.x_dim();
  const int zd = problem.z_dim();
  lp::LinearProgram program;
  program.A.resize(xd + 1, zd);
  program.A << problem.L, Eigen::RowVectorXd::Ones(zd);
  program.b = Eigen::VectorXd::Zero(xd + 1);
  program.b(xd) = 1.0;
  program.c = problem.m;
  const lp::Solution sol = lp::solve(program);
  if (sol.status != lp::Status::kOptimal) {
    return {std::numeric_limits<double>::infinity(), std::nullopt};
  }
  return {sol.objective, OrthantWitness{sol.x, sol.objective}};
}

StrictOrthantResult orthant_certificate_strict(const OrthantProblem& problem) {
  problem.validate();
  const int xd = problem.x_dim();
  const int zd = problem.z_dim();
  // Variables: p+, p-, e+, e-, s (zd), r.
  //   L^T (p+ - p-) + (e+ - e-) 1 + s = m
  //   e+ - e- + r = 1
  const int nv = 2 * xd + 2 + zd + 1;
  lp::LinearProgram program;
  program.A = Eigen::MatrixXd::Zero(zd + 1, nv);
  program.A.block(0, 0, zd, xd) = problem.L.transpose();
  program.A.block(0, xd, zd, xd) = -problem.L.transpose();
  program.A.col(2 * xd).head(zd).setOnes();
  program.A.col(2 * xd + 1).head(zd).setConstant(-1.0);
  program.A.block(0, 2 * xd + 2, zd, zd).setIdentity();
  program.A(zd, 2 * xd) = 1.0;
  program.A(zd, 2 * xd + 1) = -1.0;
  program.A(zd, nv - 1) = 1.0;
  program.b.resize(zd + 1);
  program.b << problem.m, 1.0;
  program.c = Eigen::VectorXd::Zero(nv);
  program.c(2 * xd) = -1.0;
  program.c(2 * xd + 1) = 1.0;

  const lp::Solution sol = lp::solve(program);
  if (sol.status != lp::Status::kOptimal) {
    throw std::runtime_error("orthant_certificate_strict: margin program did not solve");
  }
  StrictOrthantResult out;
  out.margin = sol.x(2 * xd) - sol.x(2 * xd + 1);
  out.feasible = out.margin > kCertificateTol;
  if (out.feasible) {
    OrthantCertificate cert;
    cert.p = sol.x.head(xd) - sol.x.segment(xd, xd);
    cert.slack = problem.m - problem.L.transpose() * cert.p;
    out.certificate = std::move(cert);
  }
  return out;
}

bool orthant_surjectivity(const Eigen::MatrixXd& L) {
  if (L.rows() < 1 || L.cols() < 1) {
    throw std::invalid_argument("orthant_surjectivity: L must be non-empty");
  }
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    for (const double sign : {1.0, -1.0}) {
      Eigen::VectorXd target = Eigen::VectorXd::Zero(L.rows());
      target(i) = sign;
      if (!lp::feasible(L, target)) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

void PsdProblem::validate() const {
  if (U.rows() != V.rows() || U.cols() != V.cols()) {
    throw std::invalid_argument("PsdProblem: U and V must have the same shape");
  }
  if (U.rows() < 1 || U.cols() < 1) {
    throw std::invalid_argument("PsdProblem: U must be non-empty");
  }
  if (C.dim() != U.cols()) {
    throw std::invalid_argument("PsdProblem: C must match the column count of U");
  }
  if (!U.allFinite() || !V.allFinite()) {
    throw std::invalid_argument("PsdProblem: non-finite data");
  }
}

SymMatrix PsdProblem::adjoint(const SymMatrix& P) const {
  const Eigen::MatrixXd half = U.transpose() * P.matrix() * V;
  return SymMatrix(half + half.transpose());
}

SymMatrix PsdProblem::forward(const SymMatrix& Q) const {
  const Eigen::MatrixXd half = U * Q.matrix() * V.transpose();
  return SymMatrix(half + half.transpose());
}

double PsdProblem::phi(const SymMatrix& P) const { return lambda_max(adjoint(P) - C); }

std::optional<PsdWitness> psd_rank_one_witness(const PsdProblem& problem, double tol) {
  problem.validate();
  // L(v v^T) = (Uv)(Vv)^T + (Vv)(Uv)^T vanishes iff Uv = 0 or Vv = 0, so the
  // rank-one kernel is ker U united with ker V.
  std::optional<PsdWitness> best;
  for (const Eigen::MatrixXd* map : {&problem.U, &problem.V}) {
    const Eigen::MatrixXd basis = null_space(*map);
    if (basis.cols() == 0) continue;
    const SymMatrix reduced(basis.transpose() * problem.C.matrix() * basis);
    const SymEig<double> eig = sym_eig(reduced);
    const double value = eig.eigenvalues(0);
    if (value >= -tol || (best && value >= best->objective)) continue;
    const Eigen::VectorXd v = (basis * eig.eigenvectors.col(0)).normalized();
    const SymMatrix Z(v * v.transpose());
    best = PsdWitness{Z, v.dot(problem.C.matrix() * v), problem.forward(Z).norm()};
  }
  return best;
}

namespace {

// Deep-cut ellipsoid method on the coordinates of P (upper triangle). Keeps
// every point with phi <= best_phi, so the best value only improves.
void refine_by_ellipsoid(const PsdProblem& problem, const PsdOptions& options, SymMatrix& best_P,
                         double& best_phi, int& iterations) {
  const int xd = problem.x_dim();
  const int d = xd * (xd + 1) / 2;
  std::vector<std::pair<int, int>> index;
  for (int i = 0; i < xd; ++i) {
    for (int j = i; j < xd; ++j) index.emplace_back(i, j);
  }
  auto to_matrix = [&](const Eigen::VectorXd& c) {
    Eigen::MatrixXd P(xd, xd);
    for (int k = 0; k < d; ++k) {
      P(index[k].first, index[k].second) = c(k);
      P(index[k].second, index[k].first) = c(k);
    }
    return SymMatrix(P);
  };

  Eigen::VectorXd c(d);
  for (int k = 0; k < d; ++k) c(k) = best_P(index[k].first, index[k].second);
  const double radius = 10.0 * (1.0 + best_P.norm());
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(d, d) * (radius * radius);
  const double dd = d;

  for (int it = 0; it < options.refine_iterations; ++it) {
    ++iterations;
    const SymMatrix P = to_matrix(c);
    const SymEig<double> eig = sym_eig(problem.adjoint(P) - problem.C);
    const double phi = eig.eigenvalues(eig.eigenvalues.size() - 1);
    if (!std::isfinite(phi)) break;
    if (phi < best_phi) {
      best_phi = phi;
      best_P = P;
    }
    if (best_phi <= options.level) break;

    const Eigen::VectorXd w = eig.eigenvectors.col(eig.eigenvectors.cols() - 1);
    const Eigen::VectorXd uw = problem.U * w;
    const Eigen::VectorXd vw = problem.V * w;
    const Eigen::MatrixXd G = uw * vw.transpose() + vw * uw.transpose();
    Eigen::VectorXd g(d);
    for (int k = 0; k < d; ++k) {
      const auto [i, j] = index[k];
      g(k) = i == j ? G(i, i) : 2.0 * G(i, j);
    }
    const double ghg = g.dot(H * g);
    if (!(ghg > 1e-300)) break;
    const double scale = std::sqrt(ghg);
    const double alpha = (phi - best_phi) / scale;
    if (alpha >= 1.0) break;
    const Eigen::VectorXd hg = H * g / scale;
    if (d == 1) {
      c -= 0.5 * (1.0 + alpha) * hg;
      H *= 0.25 * (1.0 - alpha) * (1.0 - alpha);
    } else {
      c -= (1.0 + dd * alpha) / (dd + 1.0) * hg;
      H = (dd * dd * (1.0 - alpha * alpha) / (dd * dd - 1.0)) *
          (H - (2.0 * (1.0 + dd * alpha) / ((dd + 1.0) * (1.0 + alpha))) * hg * hg.transpose());
      H = 0.5 * (H + H.transpose());
    }
    if (!c.allFinite() || !H.allFinite()) break;
  }
}

}  // namespace

PsdResult psd_certificate(const PsdProblem& problem, const PsdOptions& options) {
  problem.validate();
  const int xd = problem.x_dim();
  PsdResult result;

  if (auto witness = psd_rank_one_witness(problem, options.witness_tol)) {
    result.status = PsdStatus::kInfeasible;
    result.witness = std::move(witness);
    result.best_phi = problem.phi(SymMatrix::Zero(xd));
    return result;
  }

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double start_scale =
      (1.0 + problem.C.norm()) / (1.0 + problem.U.norm() * problem.V.norm());

  SymMatrix best_P = SymMatrix::Zero(xd);
  double best_phi = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < options.restarts; ++restart) {
    Eigen::MatrixXd start = Eigen::MatrixXd::Zero(xd, xd);
    if (restart > 0) {
      start = start.unaryExpr([&](double) { return start_scale * normal(rng); });
    }
    Eigen::MatrixXd P = SymMatrix(start).matrix();

    for (int k = 1; k <= options.iterations; ++k) {
      ++result.iterations;
      const SymMatrix Psym(P);
      const SymEig<double> eig = sym_eig(problem.adjoint(Psym) - problem.C);
      const double phi = eig.eigenvalues(eig.eigenvalues.size() - 1);
      if (!std::isfinite(phi)) break;
      if (phi < best_phi) {
        best_phi = phi;
        best_P = Psym;
      }
      if (phi <= options.level) break;

      // Subgradient of lambda_max at P: sym(U w w^T V^T + V w w^T U^T).
      const Eigen::VectorXd w = eig.eigenvectors.col(eig.eigenvectors.cols() - 1);
      const Eigen::VectorXd uw = problem.U * w;
      const Eigen::VectorXd vw = problem.V * w;
      const Eigen::MatrixXd g = uw * vw.transpose() + vw * uw.transpose();
      const double gnorm2 = g.squaredNorm();
      if (gnorm2 < 1e-300) break;
      // Level step towards phi = options.level.
      P -= ((phi - options.level) / gnorm2) * g;
      if (!P.allFinite()) break;
    }
    if (best_phi <= kCertificateTol) break;
  }

  if (best_phi > kCertificateTol && options.refine_iterations > 0) {
    refine_by_ellipsoid(problem, options, best_P, best_phi, result.iterations);
  }

  result.best_phi = best_phi;
  if (best_phi <= options.feasibility_tol) {
    PsdCertificate cert{best_P, {}, best_phi};
    cert.slack = sym_eig(problem.C - problem.adjoint(best_P)).eigenvalues;
    cert.phi = -cert.slack.minCoeff();
    result.status = PsdStatus::kFeasible;
    result.certificate = std::move(cert);
  } else {
    result.status = PsdStatus::kUndecided;
  }
  return result;
}

}  // namespace conecert
