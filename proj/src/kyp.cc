#include "conecert/kyp.h"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "conecert/possys.h"
#include "conecert/rankone.h"
#include "conecert/steering.h"

namespace conecert {

void KypInstance::validate() const {
  if (A.rows() < 1 || A.rows() != A.cols()) {
    throw std::invalid_argument("KypInstance: A must be square and non-empty");
  }
  if (B.rows() != A.rows() || B.cols() < 1) {
    throw std::invalid_argument("KypInstance: B must have n rows and at least one column");
  }
  if (M.dim() != A.rows() + B.cols()) {
    throw std::invalid_argument("KypInstance: M must have dimension n + m");
  }
  if (!A.allFinite() || !B.allFinite()) {
    throw std::invalid_argument("KypInstance: non-finite data");
  }
}

bool KypInstance::controllable() const { return controllability_rank(A, B).controllable; }

PsdProblem KypInstance::lmi_problem() const {
  validate();
  PsdProblem problem;
  problem.U.resize(n(), n() + m());
  problem.U << A, B;
  problem.V = Eigen::MatrixXd::Zero(n(), n() + m());
  problem.V.leftCols(n()).setIdentity();
  problem.C = M * -1.0;
  return problem;
}

// ---------------------------------------------------------------------------

FrequencyGrid::FrequencyGrid(const Eigen::MatrixXd& A, std::vector<double> omegas) {
  if (A.rows() != A.cols()) throw std::invalid_argument("FrequencyGrid: A is not square");
  const Eigen::VectorXcd eigs = Eigen::EigenSolver<Eigen::MatrixXd>(A, false).eigenvalues();
  for (const double w : omegas) {
    if (!std::isfinite(w) || w < 0.0) {
      throw std::invalid_argument("FrequencyGrid: frequencies must be finite and nonnegative");
    }
    bool excluded = false;
    for (Eigen::Index i = 0; i < eigs.size(); ++i) {
      if (std::abs(std::complex<double>(0.0, w) - eigs(i)) < 1e-8) excluded = true;
    }
    if (!excluded) omegas_.push_back(w);
  }
  std::sort(omegas_.begin(), omegas_.end());
}

FrequencyGrid FrequencyGrid::Default(const Eigen::MatrixXd& A, int points) {
  if (points < 2) throw std::invalid_argument("FrequencyGrid: need at least two points");
  const double scale =
      1.0 + Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues().head(1).sum();
  const double lo = std::log10(1e-3 * scale);
  const double hi = std::log10(1e3 * scale);
  std::vector<double> omegas{0.0};
  for (int k = 0; k < points; ++k) {
    omegas.push_back(std::pow(10.0, lo + (hi - lo) * k / (points - 1)));
  }
  return FrequencyGrid(A, std::move(omegas));
}

// ---------------------------------------------------------------------------

namespace {

struct FrequencyResponse {
  Eigen::MatrixXd real;
  Eigen::MatrixXd imag;
};

// (i w I - A)^{-1} B through the real system [[-A, -wI], [wI, -A]].
FrequencyResponse frequency_response(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                     double omega) {
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd big(2 * n, 2 * n);
  big << -A, -omega * Eigen::MatrixXd::Identity(n, n), omega * Eigen::MatrixXd::Identity(n, n),
      -A;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(2 * n, B.cols());
  rhs.topRows(n) = B;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(big);
  if (!lu.isInvertible()) {
    throw std::domain_error("frequency_condition: singular solve (w is an eigenfrequency of A)");
  }
  const Eigen::MatrixXd g = lu.solve(rhs);
  return {g.topRows(n), g.bottomRows(n)};
}

struct FormMax {
  double value;
  Eigen::VectorXd u_real;
  Eigen::VectorXd u_imag;
};

FormMax hermitian_max(const HermitianForm& form) {
  const Eigen::Index m = form.real.rows();
  Eigen::MatrixXd embed(2 * m, 2 * m);
  embed << form.real, -form.imag, form.imag, form.real;
  const SymEig<double> eig = sym_eig(SymMatrix::FromAverage(embed));
  const Eigen::VectorXd top = eig.eigenvectors.col(2 * m - 1);
  return {eig.eigenvalues(2 * m - 1), top.head(m), top.tail(m)};
}

}  // namespace

HermitianForm frequency_form(const KypInstance& inst, double omega) {
  inst.validate();
  const int n = inst.n();
  const FrequencyResponse g = frequency_response(inst.A, inst.B, omega);
  const Eigen::MatrixXd mxx = inst.M.upper_left(n);
  const Eigen::MatrixXd mxu = inst.M.upper_right(n);
  const Eigen::MatrixXd muu = inst.M.lower_right(n);
  HermitianForm form;
  form.real = g.real.transpose() * mxx * g.real + g.imag.transpose() * mxx * g.imag +
              g.real.transpose() * mxu + mxu.transpose() * g.real + muu;
  form.imag = g.real.transpose() * mxx * g.imag - g.imag.transpose() * mxx * g.real -
              g.imag.transpose() * mxu + mxu.transpose() * g.imag;
  return form;
}

FrequencyResult frequency_condition(const KypInstance& inst, const FrequencyGrid& grid) {
  inst.validate();
  FrequencyResult out;
  out.limit_lambda = lambda_max(SymMatrix(inst.M.lower_right(inst.n())));
  for (const double w : grid.omegas()) {
    const FormMax top = hermitian_max(frequency_form(inst, w));
    if (top.value > out.worst_lambda) {
      out.worst_lambda = top.value;
      out.worst_omega = w;
      out.worst_u_real = top.u_real;
      out.worst_u_imag = top.u_imag;
    }
  }
  out.holds = out.worst_lambda <= kFormTol && out.limit_lambda <= kFormTol;
  return out;
}

PointwiseResult pointwise_condition(const KypInstance& inst, const FrequencyGrid& grid) {
  using Complex = std::complex<double>;
  inst.validate();
  const int n = inst.n();
  const int m = inst.m();
  const Eigen::MatrixXcd mc = inst.M.matrix().cast<Complex>();
  PointwiseResult out;

  // x = 0 branch.
  {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inst.M.lower_right(n));
    const double value = es.eigenvalues()(m - 1);
    out.worst = value;
    if (value > kFormTol) {
      out.witness = PointwiseWitness{true, std::numeric_limits<double>::infinity(),
                                     Eigen::VectorXcd::Zero(n),
                                     es.eigenvectors().col(m - 1).cast<Complex>(), value};
    }
  }

  for (const double w : grid.omegas()) {
    Eigen::MatrixXcd shifted = -inst.A.cast<Complex>();
    shifted.diagonal().array() += Complex(0.0, w);
    const Eigen::FullPivLU<Eigen::MatrixXcd> lu(shifted);
    if (!lu.isInvertible()) {
      throw std::domain_error("pointwise_condition: w is an eigenfrequency of A");
    }
    const Eigen::MatrixXcd g = lu.solve(inst.B.cast<Complex>());
    // Columns (x_j; e_j) for the canonical inputs.
    Eigen::MatrixXcd z(n + m, m);
    z << g, Eigen::MatrixXcd::Identity(m, m);
    const Eigen::MatrixXcd h = z.adjoint() * mc * z;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (h + h.adjoint()));
    const double value = es.eigenvalues()(m - 1);
    if (value > out.worst) {
      out.worst = value;
      if (value > kFormTol) {
        const Eigen::VectorXcd u = es.eigenvectors().col(m - 1);
        out.witness = PointwiseWitness{false, w, g * u, u, value};
      }
    }
  }
  out.holds = out.worst <= kFormTol;
  return out;
}

// ---------------------------------------------------------------------------

KypLmiResult kyp_lmi(const KypInstance& inst, const PsdOptions& options) {
  inst.validate();
  if (!inst.controllable()) throw std::domain_error("kyp_lmi: (A, B) is not controllable");
  const PsdProblem problem = inst.lmi_problem();
  const PsdResult psd = psd_certificate(problem, options);

  KypLmiResult out;
  out.best_phi = psd.best_phi;
  out.iterations = psd.iterations;
  if (psd.status == PsdStatus::kFeasible) {
    out.lambda_max = problem.phi(psd.certificate->P);
    if (out.lambda_max <= options.feasibility_tol) {
      out.status = KypStatus::kFeasible;
      out.P = psd.certificate->P;
    }
    return out;
  }
  if (psd.status == PsdStatus::kInfeasible) {
    out.status = KypStatus::kInfeasible;
    out.witness = psd.witness;
    return out;
  }

  // Undecided: a violated frequency gives Z = Re(z z^*), z = ((iwI - A)^{-1} B u; u),
  // which satisfies U Z V^T + V Z U^T = 0 and tr(M Z) > 0.
  const FrequencyResult freq = frequency_condition(inst, FrequencyGrid::Default(inst.A));
  if (freq.worst_lambda > options.witness_tol) {
    const FrequencyResponse g = frequency_response(inst.A, inst.B, freq.worst_omega);
    const Eigen::VectorXd& ur = freq.worst_u_real;
    const Eigen::VectorXd& ui = freq.worst_u_imag;
    Eigen::VectorXd zr(inst.n() + inst.m()), zi(inst.n() + inst.m());
    zr << g.real * ur - g.imag * ui, ur;
    zi << g.real * ui + g.imag * ur, ui;
    Eigen::MatrixXd z = zr * zr.transpose() + zi * zi.transpose();
    z /= z.trace();
    const SymMatrix Z(z);
    const double objective = (problem.C.matrix().cwiseProduct(Z.matrix())).sum();
    if (objective < -options.witness_tol) {
      out.status = KypStatus::kInfeasible;
      out.witness = PsdWitness{Z, objective, problem.forward(Z).norm()};
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

IqcIntegral iqc_integral(const KypInstance& inst, const Trajectory<Eigen::VectorXd>& u,
                         bool zero_state) {
  inst.validate();
  const int n = inst.n();
  const int m = inst.m();
  for (const auto& uk : u.values) {
    if (uk.size() != m) throw std::invalid_argument("iqc_integral: input has wrong dimension");
  }
  const Trajectory<Eigen::VectorXd> xs =
      zero_state ? sample<Eigen::VectorXd>(u.grid, [n](double) { return Eigen::VectorXd::Zero(n); })
                 : simulate_component(inst.A, inst.B, Eigen::VectorXd::Zero(n), u);
  std::vector<double> form(u.values.size()), power(u.values.size());
  Eigen::VectorXd z(n + m);
  for (std::size_t k = 0; k < u.values.size(); ++k) {
    z << xs.values[k], u.values[k];
    form[k] = z.dot(inst.M.matrix() * z);
    power[k] = u.values[k].squaredNorm();
  }
  return {trapz(u.grid, form), trapz(u.grid, power), xs.values.back().norm()};
}

double default_iqc_horizon(const Eigen::MatrixXd& A) {
  const double decay = -spectral_abscissa(A);
  if (!(decay > 0.0)) return 2000.0;
  return std::clamp(40.0 / decay, 20.0, 2000.0);
}

IqcResult iqc_trajectory_condition(const KypInstance& inst, int trials, double horizon,
                                   std::uint64_t seed, int steps) {
  inst.validate();
  IqcResult out;
  if (spectral_abscissa(inst.A) >= 0.0) {
    out.applicable = false;
    out.holds = false;
    return out;
  }
  if (!(horizon > 0.0)) throw std::invalid_argument("iqc_trajectory_condition: bad horizon");

  const double scale = 1.0 + Eigen::JacobiSVD<Eigen::MatrixXd>(inst.A).singularValues()(0);
  if (steps <= 0) {
    steps = static_cast<int>(std::clamp(std::ceil(40.0 * horizon * scale), 4000.0, 400000.0));
  }
  const TimeGrid grid(0.0, horizon, steps);
  const double support = horizon / 4.0;
  const double pi = std::acos(-1.0);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> freq(0.0, 2.0 * scale);
  const int m = inst.m();
  constexpr int kTerms = 3;

  for (int trial = 0; trial < trials; ++trial) {
    std::vector<double> omegas(kTerms);
    std::vector<Eigen::VectorXd> cos_coef(kTerms), sin_coef(kTerms);
    for (int j = 0; j < kTerms; ++j) {
      omegas[j] = freq(rng);
      cos_coef[j] = Eigen::VectorXd::NullaryExpr(m, [&]() { return normal(rng); });
      sin_coef[j] = Eigen::VectorXd::NullaryExpr(m, [&]() { return normal(rng); });
    }
    const auto u = sample<Eigen::VectorXd>(grid, [&](double t) -> Eigen::VectorXd {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
      if (t >= support) return v;
      const double window = std::pow(std::sin(pi * t / support), 2);
      for (int j = 0; j < kTerms; ++j) {
        v += cos_coef[j] * std::cos(omegas[j] * t) + sin_coef[j] * std::sin(omegas[j] * t);
      }
      return window * v;
    });

    const IqcIntegral dynamic = iqc_integral(inst, u, false);
    if (dynamic.tail > 1e-6) {
      throw HorizonTooShort("iqc_trajectory_condition: state has not decayed by the horizon");
    }
    const IqcIntegral still = iqc_integral(inst, u, true);
    for (const IqcIntegral& r : {dynamic, still}) {
      const double excess = r.integral - 1e-5 * (1.0 + r.energy);
      out.integrals.push_back(r.integral);
      out.energies.push_back(r.energy);
      out.worst_integral = std::max(out.worst_integral, r.integral);
      out.worst_excess = std::max(out.worst_excess, excess);
      if (excess > 0.0) out.holds = false;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

CrossValidation cross_validate(const KypInstance& inst, const FrequencyGrid& grid, int trials,
                               std::uint64_t seed) {
  inst.validate();
  CrossValidation cv;
  cv.controllable = inst.controllable();
  cv.frequency = frequency_condition(inst, grid);
  cv.pointwise = pointwise_condition(inst, grid);
  if (cv.frequency.holds != cv.pointwise.holds) {
    cv.defects.push_back("frequency and pointwise conditions disagree");
  }

  if (cv.controllable) {
    cv.lmi = kyp_lmi(inst);
    if (cv.lmi.status == KypStatus::kFeasible &&
        std::max(cv.frequency.worst_lambda, cv.frequency.limit_lambda) > 1e-6) {
      cv.defects.push_back("LMI certificate found but the frequency condition fails");
    }
    if (cv.lmi.status == KypStatus::kInfeasible && cv.frequency.holds) {
      cv.defects.push_back("LMI infeasible but the frequency condition holds");
    }
  }

  if (spectral_abscissa(inst.A) < 0.0) {
    try {
      cv.iqc = iqc_trajectory_condition(inst, trials, default_iqc_horizon(inst.A), seed);
    } catch (const HorizonTooShort& e) {
      cv.iqc_note = e.what();
    }
  } else {
    cv.iqc_note = "not applicable: A is not Hurwitz";
  }
  if (cv.iqc && !cv.iqc->holds) {
    const bool strict_frequency =
        cv.frequency.worst_lambda <= -1e-3 && cv.frequency.limit_lambda <= -1e-3;
    if (strict_frequency) {
      cv.defects.push_back("frequency condition holds strictly but an IQC integral is positive");
    }
    if (cv.lmi.status == KypStatus::kFeasible) {
      cv.defects.push_back("LMI certificate found but an IQC integral is positive");
    }
  }
  return cv;
}

}  // namespace conecert
