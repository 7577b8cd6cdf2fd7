#include "conecert/rankone.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace conecert {

namespace {

double psd_tolerance(const SymMatrix& Q) { return 1e-8 * (1.0 + Q.norm()); }

void require_psd(const SymMatrix& Q, const std::string& where) {
  const double lmin = lambda_min(Q);
  if (lmin < -psd_tolerance(Q)) {
    throw NotPositiveSemidefinite(where + ": matrix is not positive semidefinite", lmin);
  }
}

void check_system(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int n, int m) {
  if (A.rows() != n || A.cols() != n || B.rows() != n || B.cols() != m) {
    throw std::invalid_argument("rankone: A must be n x n and B n x m");
  }
}

// Y with Y Y^T = S^2 closest to X in Frobenius norm: S polar(S X).
Eigen::MatrixXd project_onto_factors(const Eigen::MatrixXd& X, const Eigen::MatrixXd& S) {
  return S * polar_orthogonal(S * X);
}

}  // namespace

void MatrixTrajectory::validate() const {
  if (n < 1 || m < 1) throw std::invalid_argument("MatrixTrajectory: n and m must be positive");
  if (static_cast<int>(values.size()) != grid.samples()) {
    throw std::invalid_argument("MatrixTrajectory: sample count does not match grid");
  }
  for (const auto& Q : values) {
    if (Q.dim() != dim()) throw std::invalid_argument("MatrixTrajectory: sample has wrong size");
    require_psd(Q, "MatrixTrajectory");
  }
}

double MatrixTrajectory::max_norm() const {
  double out = 0.0;
  for (const auto& Q : values) out = std::max(out, Q.norm());
  return out;
}

ImageInclusion image_inclusion_check(const SymMatrix& Q, int n, int m, double tol) {
  if (n < 1 || m < 1 || Q.dim() != n + m) {
    throw std::invalid_argument("image_inclusion_check: block sizes do not match Q");
  }
  require_psd(Q, "image_inclusion_check");
  const Eigen::MatrixXd qnn = Q.upper_left(n);
  const Eigen::MatrixXd qnm = Q.upper_right(n);
  const Eigen::MatrixXd r = pinv(qnn) * qnm;
  const double residual = (qnn * r - qnm).norm() / (1.0 + qnm.norm());
  return {residual <= tol, residual};
}

RankSegmentation rank_segments(const MatrixTrajectory& traj) {
  const int samples = static_cast<int>(traj.values.size());
  RankSegmentation out;
  out.ranks.resize(static_cast<std::size_t>(samples));
  double scale = 0.0;
  for (const auto& Q : traj.values) {
    const SymEig<double> eig = sym_eig(SymMatrix(Q.upper_left(traj.n)));
    scale = std::max(scale, eig.eigenvalues.cwiseAbs().maxCoeff());
  }
  const double floor = kRankCutoff * scale;
  for (int k = 0; k < samples; ++k) {
    out.ranks[k] = scale > 0.0 ? numerical_rank(traj.values[k].upper_left(traj.n), kRankCutoff, floor)
                               : 0;
  }

  std::vector<Segment> runs;
  for (int k = 0; k < samples; ++k) {
    if (runs.empty() || runs.back().rank != out.ranks[k]) {
      runs.push_back({k, k, out.ranks[k]});
    } else {
      runs.back().end = k;
    }
  }
  const bool any_long =
      std::any_of(runs.begin(), runs.end(), [](const Segment& s) { return s.end > s.begin; });
  for (const Segment& run : runs) {
    if (run.end == run.begin && any_long && runs.size() > 1) {
      out.boundaries.push_back(run.begin);
    } else {
      out.segments.push_back(run);
    }
  }
  return out;
}

double dynamics_residual(const MatrixTrajectory& traj, const Eigen::MatrixXd& A,
                         const Eigen::MatrixXd& B) {
  const int n = traj.n;
  check_system(A, B, n, traj.m);
  const int steps = traj.grid.steps();
  const double h = traj.grid.step();

  std::vector<Eigen::MatrixXd> e, l;
  e.reserve(traj.values.size());
  l.reserve(traj.values.size());
  for (const auto& Q : traj.values) {
    e.push_back(Q.upper_left(n));
    const Eigen::MatrixXd half = A * e.back() + B * Q.upper_right(n).transpose();
    l.push_back(half + half.transpose());
  }

  double worst = 0.0;
  if (steps == 1) {
    worst = (e[1] - e[0] - 0.5 * h * (l[0] + l[1])).norm() / h;
  } else {
    for (int k = 0; k + 2 <= steps; k += 2) {
      const Eigen::MatrixXd integral = (h / 3.0) * (l[k] + 4.0 * l[k + 1] + l[k + 2]);
      worst = std::max(worst, (e[k + 2] - e[k] - integral).norm() / (2.0 * h));
    }
    if (steps % 2 == 1) {
      const int k = steps;
      const Eigen::MatrixXd integral = (h / 12.0) * (-l[k - 2] + 8.0 * l[k - 1] + 5.0 * l[k]);
      worst = std::max(worst, (e[k] - e[k - 1] - integral).norm() / h);
    }
  }
  return worst / (1.0 + traj.max_norm());
}

RankOneDecomposition decompose(const MatrixTrajectory& traj, const Eigen::MatrixXd& A,
                               const Eigen::MatrixXd& B, const DecomposeOptions& options) {
  traj.validate();
  const int n = traj.n;
  const int m = traj.m;
  check_system(A, B, n, m);

  RankOneDecomposition out;
  out.input_residual = dynamics_residual(traj, A, B);
  if (out.input_residual > options.dynamics_tol) {
    throw DynamicsViolation("decompose: trajectory does not satisfy the matrix dynamics",
                            out.input_residual);
  }
  out.segmentation = rank_segments(traj);

  const int samples = traj.grid.samples();
  const double h = traj.grid.step();

  // Per-sample blocks, square roots and R = pinv(Q_nn) Q_nm.
  double scale = 0.0;
  for (const auto& Q : traj.values) scale = std::max(scale, Q.upper_left(n).norm());
  const double floor = kRankCutoff * scale;
  std::vector<Eigen::MatrixXd> roots(samples), r(samples);
  for (int k = 0; k < samples; ++k) {
    const SymMatrix qnn(traj.values[k].upper_left(n));
    roots[k] = sqrtm_psd(qnn).matrix();
    r[k] = pinv(qnn.matrix(), kRankCutoff, floor) * traj.values[k].upper_right(n);
  }

  auto frozen_step = [&](const Eigen::MatrixXd& X, int from, int to) {
    auto field = [&, from](double, const Eigen::MatrixXd& Y) -> Eigen::MatrixXd {
      return A * Y + B * (r[from].transpose() * Y);
    };
    const Eigen::MatrixXd pred =
        rk4_step(field, traj.grid.time(from), X, (to - from) * h);
    return project_onto_factors(pred, roots[to]);
  };

  std::vector<Eigen::MatrixXd> X(samples);
  const auto& segments = out.segmentation.segments;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const Segment& seg = segments[s];
    X[seg.begin] = roots[seg.begin];
    if (seg.end > seg.begin) {
      // dX/dt = (A + B R(t)^T) X, R interpolated within the segment only.
      const Trajectory<Eigen::MatrixXd> r_seg{
          TimeGrid(traj.grid.time(seg.begin), traj.grid.time(seg.end), seg.end - seg.begin),
          std::vector<Eigen::MatrixXd>(r.begin() + seg.begin, r.begin() + seg.end + 1)};
      const SampledSignal<Eigen::MatrixXd> r_of_t(r_seg);
      auto field = [&](double t, const Eigen::MatrixXd& Y) -> Eigen::MatrixXd {
        return A * Y + B * (r_of_t(t).transpose() * Y);
      };
      for (int k = seg.begin; k < seg.end; ++k) {
        // Substeps keep h ||A + B R^T|| small where Q_nn is nearly singular.
        const double stiffness = std::max((A + B * r[k].transpose()).norm(),
                                          (A + B * r[k + 1].transpose()).norm());
        const int substeps = std::clamp(static_cast<int>(std::ceil(h * stiffness / 0.25)), 1, 4096);
        const double dt = h / substeps;
        Eigen::MatrixXd pred = X[k];
        for (int j = 0; j < substeps; ++j) {
          pred = rk4_step(field, traj.grid.time(k) + j * dt, pred, dt);
        }
        X[k + 1] = project_onto_factors(pred, roots[k + 1]);
      }
    }
    if (s == 0) {
      // Leading boundary samples, filled backwards.
      for (int k = seg.begin - 1; k >= 0; --k) X[k] = frozen_step(X[k + 1], k + 1, k);
      continue;
    }

    // Junction with the previous segment: left limit propagated forwards
    // through any boundary samples, right limit from this segment.
    const Segment& prev = segments[s - 1];
    for (int k = prev.end + 1; k < seg.begin; ++k) X[k] = frozen_step(X[k - 1], k - 1, k);
    const int junction = seg.begin > prev.end + 1 ? seg.begin - 1 : seg.begin;
    const Eigen::MatrixXd left =
        junction == seg.begin ? frozen_step(X[prev.end], prev.end, seg.begin) : X[junction];
    const Eigen::MatrixXd right =
        junction == seg.begin ? X[seg.begin] : frozen_step(X[seg.begin], seg.begin, junction);
    const Eigen::MatrixXd align = polar_orthogonal(right.transpose() * left);
    out.stitching_errors.push_back((right * align - left).norm());
    for (int k = seg.begin; k <= seg.end; ++k) X[k] = X[k] * align;
  }
  if (!segments.empty()) {
    for (int k = segments.back().end + 1; k < samples; ++k) X[k] = frozen_step(X[k - 1], k - 1, k);
  }

  // State components: columns of X and R^T X.
  out.components.resize(static_cast<std::size_t>(n + m));
  for (int i = 0; i < n + m; ++i) {
    out.components[i].zero_state = i >= n;
    out.components[i].x.reserve(samples);
    out.components[i].u.reserve(samples);
  }
  out.schur_min_eigenvalue = std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    const SymMatrix& Q = traj.values[k];
    const Eigen::MatrixXd u_state = r[k].transpose() * X[k];
    for (int i = 0; i < n; ++i) {
      out.components[i].x.push_back(X[k].col(i));
      out.components[i].u.push_back(u_state.col(i));
    }
    // Remaining components: spectral factors of Q_mm - R^T Q_nn R.
    const SymMatrix schur =
        SymMatrix::FromAverage(Q.lower_right(n) - r[k].transpose() * Q.upper_left(n) * r[k]);
    const SymEig<double> eig = sym_eig(schur);
    out.schur_min_eigenvalue = std::min(out.schur_min_eigenvalue, eig.eigenvalues(0));
    if (eig.eigenvalues(0) < -options.schur_tol * (1.0 + Q.norm())) {
      throw NotPositiveSemidefinite("decompose: Q_mm - R^T Q_nn R is not positive semidefinite",
                                    eig.eigenvalues(0));
    }
    for (int j = 0; j < m; ++j) {
      const int col = m - 1 - j;  // descending eigenvalue order
      Eigen::VectorXd v = eig.eigenvectors.col(col);
      Eigen::Index big = 0;
      v.cwiseAbs().maxCoeff(&big);
      if (v(big) < 0) v = -v;
      out.components[n + j].x.push_back(Eigen::VectorXd::Zero(n));
      out.components[n + j].u.push_back(std::sqrt(std::max(eig.eigenvalues(col), 0.0)) * v);
    }
  }

  // Reconstruction.
  for (int k = 0; k < samples; ++k) {
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n + m, n + m);
    for (const Component& c : out.components) {
      Eigen::VectorXd z(n + m);
      z << c.x[k], c.u[k];
      sum.noalias() += z * z.transpose();
    }
    out.reconstruction_error =
        std::max(out.reconstruction_error, (sum - traj.values[k].matrix()).norm());
  }

  // ODE residuals by fourth-order central differences inside segments.
  std::vector<char> usable(samples, 0);
  for (const Segment& seg : segments) {
    const int lo = seg.begin + (seg.begin == 0 ? 2 : std::max(options.boundary_exclusion, 2));
    const int hi = seg.end - (seg.end == samples - 1 ? 2 : std::max(options.boundary_exclusion, 2));
    for (int k = lo; k <= hi; ++k) usable[k] = 1;
  }
  out.ode_residuals.assign(static_cast<std::size_t>(n + m), 0.0);
  for (int i = 0; i < n; ++i) {
    const Component& c = out.components[i];
    for (int k = 2; k + 2 < samples; ++k) {
      if (!usable[k]) continue;
      const Eigen::VectorXd deriv =
          (c.x[k - 2] - 8.0 * c.x[k - 1] + 8.0 * c.x[k + 1] - c.x[k + 2]) / (12.0 * h);
      const double res = (deriv - A * c.x[k] - B * c.u[k]).norm();
      out.ode_residuals[i] = std::max(out.ode_residuals[i], res);
    }
    out.max_ode_residual = std::max(out.max_ode_residual, out.ode_residuals[i]);
  }
  return out;
}

Trajectory<Eigen::VectorXd> simulate_component(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                               const Eigen::VectorXd& x0,
                                               const Trajectory<Eigen::VectorXd>& u) {
  const SampledSignal<Eigen::VectorXd> input(u);
  auto field = [&](double t, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return A * x + B * input(t);
  };
  return ode_solve(field, x0, u.grid, false).trajectory;
}

MatrixTrajectory synthesize_Q(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              const std::vector<Eigen::VectorXd>& x_inits,
                              const std::vector<Trajectory<Eigen::VectorXd>>& u_signals,
                              const TimeGrid& grid) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  check_system(A, B, n, m);
  if (x_inits.size() != u_signals.size()) {
    throw std::invalid_argument("synthesize_Q: need one input signal per initial state");
  }
  if (static_cast<int>(x_inits.size()) > n + m) {
    throw std::invalid_argument("synthesize_Q: at most n + m components");
  }

  MatrixTrajectory out{grid, {}, n, m};
  std::vector<Eigen::MatrixXd> sums(grid.samples(), Eigen::MatrixXd::Zero(n + m, n + m));
  for (std::size_t i = 0; i < x_inits.size(); ++i) {
    const auto& u = u_signals[i];
    if (x_inits[i].size() != n || !(u.grid == grid)) {
      throw std::invalid_argument("synthesize_Q: component shape or grid mismatch");
    }
    for (const auto& uk : u.values) {
      if (uk.size() != m) throw std::invalid_argument("synthesize_Q: input has wrong dimension");
    }
    const auto xs = simulate_component(A, B, x_inits[i], u);
    for (int k = 0; k < grid.samples(); ++k) {
      Eigen::VectorXd z(n + m);
      z << xs.values[k], u.values[k];
      sums[k].noalias() += z * z.transpose();
    }
  }
  out.values.reserve(sums.size());
  for (const auto& s : sums) out.values.emplace_back(s);
  return out;
}

}  // namespace conecert
