#pragma once

/// @file
/// Dense linear-algebra and integration primitives shared by every module:
/// symmetric eigendecomposition (cyclic Jacobi), PSD square roots,
/// pseudoinverses, matrix exponentials, fixed-step RK4 and trapezoid
/// quadrature. Everything here is templated on the scalar type and works on
/// Eigen dense types.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace conecert {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Relative singular-value cutoff used for every rank decision in the
/// library: sigma < kRankCutoff * sigma_max counts as zero.
inline constexpr double kRankCutoff = 1e-10;

/// A real symmetric matrix. Only the upper triangle of the source is read;
/// the stored matrix equals its transpose bit for bit.
template <typename Scalar>
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;

  explicit SymmetricMatrix(Eigen::Index dim)
      : data_(MatrixX<Scalar>::Zero(dim, dim)) {}

  template <typename Derived>
  explicit SymmetricMatrix(const Eigen::MatrixBase<Derived>& m) {
    if (m.rows() != m.cols()) {
      throw std::invalid_argument("SymmetricMatrix: input is not square");
    }
    if (!m.allFinite()) {
      throw std::invalid_argument("SymmetricMatrix: non-finite entry");
    }
    const MatrixX<Scalar> tmp = m;
    data_ = tmp.template selfadjointView<Eigen::Upper>();
  }

  /// Builds (m + m^T) / 2.
  template <typename Derived>
  static SymmetricMatrix FromAverage(const Eigen::MatrixBase<Derived>& m) {
    const MatrixX<Scalar> tmp = m;
    return SymmetricMatrix((tmp + tmp.transpose()) / Scalar(2));
  }

  static SymmetricMatrix Zero(Eigen::Index dim) { return SymmetricMatrix(dim); }
  static SymmetricMatrix Identity(Eigen::Index dim) {
    return SymmetricMatrix(MatrixX<Scalar>::Identity(dim, dim));
  }

  Eigen::Index dim() const { return data_.rows(); }
  const MatrixX<Scalar>& matrix() const { return data_; }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return data_(i, j); }
  Scalar norm() const { return data_.norm(); }
  Scalar trace() const { return data_.trace(); }

  SymmetricMatrix operator+(const SymmetricMatrix& o) const {
    return SymmetricMatrix(data_ + o.data_);
  }
  SymmetricMatrix operator-(const SymmetricMatrix& o) const {
    return SymmetricMatrix(data_ - o.data_);
  }
  SymmetricMatrix operator*(Scalar s) const { return SymmetricMatrix(data_ * s); }

  /// Diagonal blocks and the off-diagonal block of the (n, dim - n) split.
  MatrixX<Scalar> upper_left(Eigen::Index n) const {
    return data_.topLeftCorner(n, n);
  }
  MatrixX<Scalar> upper_right(Eigen::Index n) const {
    return data_.topRightCorner(n, dim() - n);
  }
  MatrixX<Scalar> lower_right(Eigen::Index n) const {
    return data_.bottomRightCorner(dim() - n, dim() - n);
  }

 private:
  MatrixX<Scalar> data_;
};

using SymMatrix = SymmetricMatrix<double>;

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition.

template <typename Scalar>
struct SymEig {
  VectorX<Scalar> eigenvalues;   // ascending
  MatrixX<Scalar> eigenvectors;  // orthogonal, column j pairs with eigenvalue j
};

/// Cyclic Jacobi eigendecomposition: S = V diag(lambda) V^T.
template <typename Scalar>
SymEig<Scalar> sym_eig(const SymmetricMatrix<Scalar>& S, int max_sweeps = 64) {
  MatrixX<Scalar> a = S.matrix();
  if (!a.allFinite()) {
    throw std::invalid_argument("sym_eig: non-finite entry");
  }
  const Eigen::Index n = a.rows();
  MatrixX<Scalar> v = MatrixX<Scalar>::Identity(n, n);
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  const Scalar total = a.squaredNorm();

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    Scalar off = 0;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (off <= eps * eps * total || off == Scalar(0)) break;

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == Scalar(0)) continue;
        Eigen::JacobiRotation<Scalar> rot;
        rot.makeJacobi(a, p, q);
        a.applyOnTheLeft(p, q, rot.adjoint());
        a.applyOnTheRight(p, q, rot);
        v.applyOnTheRight(p, q, rot);
        a(p, q) = a(q, p) = Scalar(0);
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return a(i, i) < a(j, j);
  });
  SymEig<Scalar> out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues(k) = a(order[k], order[k]);
    out.eigenvectors.col(k) = v.col(order[k]);
  }
  return out;
}

template <typename Scalar>
Scalar lambda_min(const SymmetricMatrix<Scalar>& S) {
  return S.dim() == 0 ? Scalar(0) : sym_eig(S).eigenvalues(0);
}

template <typename Scalar>
Scalar lambda_max(const SymmetricMatrix<Scalar>& S) {
  return S.dim() == 0 ? Scalar(0) : sym_eig(S).eigenvalues(S.dim() - 1);
}

/// Default PSD tolerance: 1e-8 * (1 + ||S||_F).
template <typename Scalar>
Scalar default_psd_tolerance(const SymmetricMatrix<Scalar>& S) {
  return Scalar(1e-8) * (Scalar(1) + S.norm());
}

/// Principal square root of a PSD matrix. Eigenvalues in [-tol, 0) are
/// clamped to zero; anything below -tol is an error.
template <typename Scalar>
SymmetricMatrix<Scalar> sqrtm_psd(const SymmetricMatrix<Scalar>& S,
                                  std::optional<Scalar> tol = std::nullopt) {
  const Scalar t = tol.value_or(default_psd_tolerance(S));
  const SymEig<Scalar> eig = sym_eig(S);
  if (S.dim() > 0 && eig.eigenvalues(0) < -t) {
    throw std::domain_error("sqrtm_psd: matrix is not positive semidefinite");
  }
  const VectorX<Scalar> roots =
      eig.eigenvalues.unaryExpr([](Scalar x) { return std::sqrt(std::max(x, Scalar(0))); });
  return SymmetricMatrix<Scalar>(eig.eigenvectors * roots.asDiagonal() *
                                 eig.eigenvectors.transpose());
}

// ---------------------------------------------------------------------------
// Pseudoinverse and rank.

/// Singular values below max(cutoff * sigma_max, floor) are treated as zero.
template <typename Derived>
MatrixX<typename Derived::Scalar> pinv(const Eigen::MatrixBase<Derived>& m,
                                       double cutoff = kRankCutoff, double floor = 0.0) {
  using Scalar = typename Derived::Scalar;
  if (!m.allFinite()) throw std::invalid_argument("pinv: non-finite entry");
  if (m.size() == 0) return MatrixX<Scalar>::Zero(m.cols(), m.rows());
  const MatrixX<Scalar> mat = m;
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const Scalar threshold = std::max<Scalar>(Scalar(cutoff) * sv(0), Scalar(floor));
  VectorX<Scalar> inv(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    inv(i) = (sv(i) > threshold && sv(i) > Scalar(0)) ? Scalar(1) / sv(i) : Scalar(0);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

template <typename Derived>
int numerical_rank(const Eigen::MatrixBase<Derived>& m, double cutoff = kRankCutoff,
                   double floor = 0.0) {
  using Scalar = typename Derived::Scalar;
  if (m.size() == 0) return 0;
  const MatrixX<Scalar> mat = m;
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(mat);
  const auto& sv = svd.singularValues();
  const Scalar threshold = std::max<Scalar>(Scalar(cutoff) * sv(0), Scalar(floor));
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > threshold && sv(i) > Scalar(0)) ++r;
  }
  return r;
}

/// Orthonormal basis of the null space of m (columns), same cutoff as pinv.
template <typename Derived>
MatrixX<typename Derived::Scalar> null_space(const Eigen::MatrixBase<Derived>& m,
                                             double cutoff = kRankCutoff) {
  using Scalar = typename Derived::Scalar;
  const MatrixX<Scalar> mat = m;
  if (mat.rows() == 0) return MatrixX<Scalar>::Identity(mat.cols(), mat.cols());
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(mat, Eigen::ComputeFullV);
  const int r = numerical_rank(mat, cutoff);
  return svd.matrixV().rightCols(mat.cols() - r);
}

/// Orthogonal factor W Z^T of the singular decomposition W S Z^T of m.
template <typename Derived>
MatrixX<typename Derived::Scalar> polar_orthogonal(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const MatrixX<Scalar> mat = m;
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(mat, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

// ---------------------------------------------------------------------------
// Matrix exponential: scaling and squaring around a truncated Taylor series.

template <typename Derived>
MatrixX<typename Derived::Scalar> expm(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() != m.cols()) throw std::invalid_argument("expm: matrix is not square");
  if (!m.allFinite()) throw std::invalid_argument("expm: non-finite entry");
  const Eigen::Index n = m.rows();
  const Scalar norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > Scalar(0.5)) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / Scalar(0.5))));
  }
  const MatrixX<Scalar> a = m / std::ldexp(Scalar(1), squarings);
  MatrixX<Scalar> result = MatrixX<Scalar>::Identity(n, n);
  MatrixX<Scalar> term = MatrixX<Scalar>::Identity(n, n);
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  for (int k = 1; k <= 40; ++k) {
    term = (term * a) / Scalar(k);
    result += term;
    if (term.norm() <= eps * result.norm()) break;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

// ---------------------------------------------------------------------------
// Time grids, sampled trajectories, interpolation.

/// Uniform grid t0 + k (t1 - t0) / steps, k = 0..steps.
class TimeGrid {
 public:
  TimeGrid(double t0, double t1, int steps) : t0_(t0), t1_(t1), steps_(steps) {
    if (!(t1 > t0) || !std::isfinite(t0) || !std::isfinite(t1)) {
      throw std::invalid_argument("TimeGrid: requires finite t1 > t0");
    }
    if (steps < 1) throw std::invalid_argument("TimeGrid: steps must be positive");
  }

  double t0() const { return t0_; }
  double t1() const { return t1_; }
  int steps() const { return steps_; }
  int samples() const { return steps_ + 1; }
  double step() const { return (t1_ - t0_) / steps_; }
  double length() const { return t1_ - t0_; }
  double time(int k) const {
    return k == steps_ ? t1_ : t0_ + k * ((t1_ - t0_) / steps_);
  }

  bool operator==(const TimeGrid& o) const {
    return t0_ == o.t0_ && t1_ == o.t1_ && steps_ == o.steps_;
  }

 private:
  double t0_;
  double t1_;
  int steps_;
};

/// Per-sample values on a TimeGrid.
template <typename Value>
struct Trajectory {
  TimeGrid grid;
  std::vector<Value> values;

  const Value& operator[](std::size_t k) const { return values[k]; }
  std::size_t size() const { return values.size(); }
};

template <typename Value, typename Fn>
Trajectory<Value> sample(const TimeGrid& grid, Fn&& fn) {
  Trajectory<Value> out{grid, {}};
  out.values.reserve(static_cast<std::size_t>(grid.samples()));
  for (int k = 0; k < grid.samples(); ++k) out.values.push_back(fn(grid.time(k)));
  return out;
}

/// Piecewise-cubic interpolant (four-point Lagrange stencil) of samples on a
/// uniform grid; linear when fewer than four samples exist.
template <typename Value>
class SampledSignal {
 public:
  explicit SampledSignal(const Trajectory<Value>& traj) : traj_(&traj) {
    if (static_cast<int>(traj.values.size()) != traj.grid.samples()) {
      throw std::invalid_argument("SampledSignal: sample count does not match grid");
    }
  }

  Value operator()(double t) const {
    const TimeGrid& g = traj_->grid;
    const auto& v = traj_->values;
    const int last = g.steps();
    const double s = (t - g.t0()) / g.step();
    int k = static_cast<int>(std::floor(s));
    k = std::clamp(k, 0, last - 1);
    if (last < 3) {
      const double w = s - k;
      return Value(v[k] * (1.0 - w) + v[k + 1] * w);
    }
    const int base = std::clamp(k - 1, 0, last - 3);
    const double x = s - base;  // stencil nodes at 0, 1, 2, 3
    const double l0 = -(x - 1) * (x - 2) * (x - 3) / 6.0;
    const double l1 = x * (x - 2) * (x - 3) / 2.0;
    const double l2 = -x * (x - 1) * (x - 3) / 2.0;
    const double l3 = x * (x - 1) * (x - 2) / 6.0;
    return Value(v[base] * l0 + v[base + 1] * l1 + v[base + 2] * l2 + v[base + 3] * l3);
  }

 private:
  const Trajectory<Value>* traj_;
};

// ---------------------------------------------------------------------------
// Fixed-step classical Runge-Kutta.

template <typename State, typename Field>
State rk4_step(Field&& f, double t, const State& x, double h) {
  const State k1 = f(t, x);
  const State k2 = f(t + h / 2, State(x + (h / 2) * k1));
  const State k3 = f(t + h / 2, State(x + (h / 2) * k2));
  const State k4 = f(t + h, State(x + h * k3));
  return State(x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4));
}

template <typename State>
struct OdeSolution {
  Trajectory<State> trajectory;
  /// Largest step-halving estimate |x_h - x_{h/2}| / 15 over all steps
  /// (zero when estimation is disabled).
  double local_error = 0.0;
};

/// Integrates dx/dt = f(t, x) on the grid with classical RK4. Each step is
/// optionally repeated as two half steps to estimate the local error.
template <typename State, typename Field>
OdeSolution<State> ode_solve(Field&& f, const State& x0, const TimeGrid& grid,
                             bool estimate_error = true) {
  if (!x0.allFinite()) throw std::runtime_error("ode_solve: non-finite initial state");
  OdeSolution<State> out{Trajectory<State>{grid, {}}, 0.0};
  auto& xs = out.trajectory.values;
  xs.reserve(static_cast<std::size_t>(grid.samples()));
  xs.push_back(x0);
  const double h = grid.step();
  for (int k = 0; k < grid.steps(); ++k) {
    const double t = grid.time(k);
    State next = rk4_step(f, t, xs.back(), h);
    if (estimate_error) {
      const State half = rk4_step(f, t, xs.back(), h / 2);
      const State fine = rk4_step(f, t + h / 2, half, h / 2);
      out.local_error = std::max(out.local_error, double((fine - next).norm()) / 15.0);
    }
    if (!next.allFinite()) {
      throw std::runtime_error("ode_solve: non-finite state encountered");
    }
    xs.push_back(std::move(next));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quadrature.

/// Composite trapezoid rule over uniformly spaced samples.
template <typename Derived>
typename Derived::Scalar trapz(const TimeGrid& grid, const Eigen::MatrixBase<Derived>& f) {
  using Scalar = typename Derived::Scalar;
  if (f.size() != grid.samples()) {
    throw std::invalid_argument("trapz: sample count does not match grid");
  }
  if (f.size() < 2) throw std::invalid_argument("trapz: need at least two samples");
  const Eigen::Index last = f.size() - 1;
  const Scalar interior = f.segment(1, last - 1).sum();
  return Scalar(grid.step()) * (interior + (f(0) + f(last)) / Scalar(2));
}

inline double trapz(const TimeGrid& grid, const std::vector<double>& f) {
  return trapz(grid, Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size())));
}

}  // namespace conecert
