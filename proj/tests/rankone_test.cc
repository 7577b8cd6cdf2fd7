#include "conecert/rankone.h"

#include <cmath>

#include <gtest/gtest.h>

#include "test_generators.h"

namespace conecert {
namespace {

using testing::Rng;
using testing::uniform_int;

Eigen::MatrixXd scalar(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

Trajectory<Eigen::VectorXd> constant_input(const TimeGrid& grid, const Eigen::VectorXd& u) {
  return sample<Eigen::VectorXd>(grid, [&](double) { return u; });
}

MatrixTrajectory from_function(const TimeGrid& grid, int n, int m,
                               const std::function<Eigen::MatrixXd(double)>& q) {
  MatrixTrajectory traj{grid, {}, n, m};
  for (int k = 0; k < grid.samples(); ++k) traj.values.emplace_back(q(grid.time(k)));
  return traj;
}

TEST(ImageInclusionTest, Identity) {
  const ImageInclusion r = image_inclusion_check(SymMatrix::Identity(3), 2, 1);
  EXPECT_TRUE(r.holds);
  EXPECT_EQ(r.residual, 0.0);
}

TEST(ImageInclusionTest, RankOne) {
  const Eigen::Vector3d z(1.0, -2.0, 0.5);
  const ImageInclusion r = image_inclusion_check(SymMatrix(z * z.transpose()), 2, 1);
  EXPECT_TRUE(r.holds);
  EXPECT_LE(r.residual, 1e-12);
}

TEST(ImageInclusionTest, IndefiniteRejected) {
  Eigen::Matrix2d swap;
  swap << 0, 1, 1, 0;
  EXPECT_THROW(image_inclusion_check(SymMatrix(swap), 1, 1), NotPositiveSemidefinite);
}

TEST(ImageInclusionTest, RandomPsd) {
  Rng rng(61);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = uniform_int(rng, 1, 4), m = uniform_int(rng, 1, 3);
    const SymMatrix q = testing::random_psd(rng, n + m, uniform_int(rng, 0, n + m));
    EXPECT_TRUE(image_inclusion_check(q, n, m).holds) << "trial " << trial;
  }
}

TEST(RankSegmentsTest, DipAtZero) {
  const TimeGrid grid(-1.0, 1.0, 20);
  const MatrixTrajectory traj = from_function(grid, 2, 1, [](double t) {
    Eigen::Matrix3d q = Eigen::Matrix3d::Zero();
    q(0, 0) = t * t;
    q(1, 1) = 1.0;
    return Eigen::MatrixXd(q);
  });
  const RankSegmentation seg = rank_segments(traj);
  ASSERT_EQ(seg.segments.size(), 2u);
  EXPECT_EQ(seg.boundaries, std::vector<int>{10});
  EXPECT_EQ(seg.segments[0].begin, 0);
  EXPECT_EQ(seg.segments[0].end, 9);
  EXPECT_EQ(seg.segments[1].begin, 11);
  EXPECT_EQ(seg.segments[1].end, 20);
  EXPECT_EQ(seg.ranks[10], 1);
  EXPECT_EQ(seg.segments[0].rank, 2);
}

TEST(RankSegmentsTest, ConstantAndZero) {
  const TimeGrid grid(0.0, 1.0, 8);
  const RankSegmentation full =
      rank_segments(from_function(grid, 2, 1, [](double) { return Eigen::MatrixXd::Identity(3, 3); }));
  ASSERT_EQ(full.segments.size(), 1u);
  EXPECT_EQ(full.segments[0].end, 8);
  EXPECT_EQ(full.segments[0].rank, 2);
  const RankSegmentation zero =
      rank_segments(from_function(grid, 2, 1, [](double) { return Eigen::MatrixXd::Zero(3, 3); }));
  ASSERT_EQ(zero.segments.size(), 1u);
  EXPECT_EQ(zero.segments[0].rank, 0);
  EXPECT_TRUE(zero.boundaries.empty());
}

TEST(SynthesizeTest, ZeroComponents) {
  const TimeGrid grid(0.0, 1.0, 16);
  const MatrixTrajectory q =
      synthesize_Q(scalar(-1), scalar(1), {Eigen::VectorXd::Zero(1)},
                   {constant_input(grid, Eigen::VectorXd::Zero(1))}, grid);
  EXPECT_EQ(q.max_norm(), 0.0);
}

TEST(SynthesizeTest, ScalarDecay) {
  const TimeGrid grid(0.0, 2.0, 256);
  const MatrixTrajectory q =
      synthesize_Q(scalar(-1), scalar(0), {Eigen::VectorXd::Ones(1)},
                   {constant_input(grid, Eigen::VectorXd::Zero(1))}, grid);
  for (int k = 0; k < grid.samples(); ++k) {
    EXPECT_NEAR(q.values[k](0, 0), std::exp(-2 * grid.time(k)), 1e-10);
    EXPECT_EQ(q.values[k](0, 1), 0.0);
    EXPECT_EQ(q.values[k](1, 1), 0.0);
  }
}

TEST(SynthesizeTest, ConstantRankTwo) {
  const TimeGrid grid(0.0, 1.0, 8);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 2);
  const Eigen::MatrixXd zero_b = Eigen::MatrixXd::Zero(2, 1);
  const MatrixTrajectory q = synthesize_Q(
      zero, zero_b, {Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 2)},
      {constant_input(grid, Eigen::VectorXd::Zero(1)), constant_input(grid, Eigen::VectorXd::Zero(1))},
      grid);
  for (const SymMatrix& s : q.values) {
    EXPECT_EQ(s.upper_left(2), Eigen::Vector2d(1, 4).asDiagonal().toDenseMatrix());
  }
}

TEST(SynthesizeTest, SatisfiesDynamics) {
  Rng rng(62);
  const TimeGrid grid(0.0, 2.0, 512);
  for (int trial = 0; trial < 20; ++trial) {
    const testing::SynthesizedTrajectory s =
        testing::random_synthesized(rng, uniform_int(rng, 1, 3), uniform_int(rng, 1, 2), grid);
    EXPECT_LE(dynamics_residual(s.Q, s.A, s.B), 1e-6);
    for (const SymMatrix& q : s.Q.values) {
      EXPECT_GE(lambda_min(q), -1e-8 * (1 + q.norm()));
      EXPECT_TRUE(image_inclusion_check(q, s.Q.n, s.Q.m).holds);
    }
  }
}

TEST(DecomposeTest, ScalarDecay) {
  const TimeGrid grid(0.0, 2.0, 512);
  const MatrixTrajectory q =
      synthesize_Q(scalar(-1), scalar(0), {Eigen::VectorXd::Ones(1)},
                   {constant_input(grid, Eigen::VectorXd::Zero(1))}, grid);
  const RankOneDecomposition d = decompose(q, scalar(-1), scalar(0));
  ASSERT_EQ(d.components.size(), 2u);
  const Component& state = d.components[0];
  EXPECT_FALSE(state.zero_state);
  for (int k = 0; k < grid.samples(); ++k) {
    EXPECT_NEAR(std::abs(state.x[k](0)), std::exp(-grid.time(k)), 1e-8);
    EXPECT_NEAR(state.u[k](0), 0.0, 1e-8);
    EXPECT_NEAR(d.components[1].u[k](0), 0.0, 1e-8);
  }
  EXPECT_TRUE(d.components[1].zero_state);
  EXPECT_LE(d.reconstruction_error, 1e-8);
}

TEST(DecomposeTest, ZeroTrajectory) {
  const TimeGrid grid(0.0, 1.0, 64);
  const MatrixTrajectory q =
      from_function(grid, 2, 1, [](double) { return Eigen::MatrixXd::Zero(3, 3); });
  const RankOneDecomposition d = decompose(q, Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Ones(2, 1));
  ASSERT_EQ(d.components.size(), 3u);
  for (const Component& c : d.components) {
    for (const auto& x : c.x) EXPECT_EQ(x.norm(), 0.0);
    for (const auto& u : c.u) EXPECT_EQ(u.norm(), 0.0);
  }
}

TEST(DecomposeTest, RoundTrip) {
  Rng rng(63);
  const TimeGrid grid(0.0, 2.0, 4096);
  for (int trial = 0; trial < 10; ++trial) {
    const testing::SynthesizedTrajectory s =
        testing::random_synthesized(rng, uniform_int(rng, 1, 3), uniform_int(rng, 1, 2), grid);
    const RankOneDecomposition d = decompose(s.Q, s.A, s.B);
    EXPECT_LE(d.reconstruction_error, 1e-4 * s.Q.max_norm()) << "trial " << trial;
    EXPECT_LE(d.max_ode_residual, 1e-3) << "trial " << trial;
    EXPECT_GE(d.schur_min_eigenvalue, -1e-7 * (1 + s.Q.max_norm()));
  }
}

TEST(DecomposeTest, FixedTwoByOneExample) {
  Rng rng(64);
  const TimeGrid grid(0.0, 2.0, 1024);
  const testing::SynthesizedTrajectory s = testing::random_synthesized(rng, 2, 1, grid);
  const RankOneDecomposition d = decompose(s.Q, s.A, s.B);
  EXPECT_EQ(d.components.size(), 3u);
  EXPECT_LE(d.reconstruction_error, 1e-4 * s.Q.max_norm());
  EXPECT_LE(d.max_ode_residual, 1e-3);
}

// x_1 = (t - 1, 1), x_2 = (0, 1) with A = 0, B = I: Q_nn drops rank at t = 1.
TEST(DecomposeTest, RankCrossingStitches) {
  const TimeGrid grid(0.0, 2.0, 2000);
  const Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
  const Eigen::MatrixXd B = Eigen::MatrixXd::Identity(2, 2);
  const std::vector<Eigen::VectorXd> starts{Eigen::Vector2d(-1, 1), Eigen::Vector2d(0, 1)};
  const std::vector<Trajectory<Eigen::VectorXd>> inputs{
      constant_input(grid, Eigen::Vector2d(1, 0)), constant_input(grid, Eigen::Vector2d(0, 0))};
  const MatrixTrajectory q = synthesize_Q(A, B, starts, inputs, grid);
  const RankOneDecomposition d = decompose(q, A, B);
  ASSERT_GE(d.stitching_errors.size(), 1u);
  for (double e : d.stitching_errors) EXPECT_LE(e, 1e-4);
  EXPECT_LE(d.reconstruction_error, 1e-4 * q.max_norm());
  EXPECT_LE(d.max_ode_residual, 1e-3);
}

TEST(DecomposeTest, RejectsNonSolution) {
  const TimeGrid grid(0.0, 1.0, 64);
  const MatrixTrajectory q = from_function(grid, 1, 1, [](double t) {
    Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
    m(0, 0) = 1 + t;
    return Eigen::MatrixXd(m);
  });
  try {
    decompose(q, scalar(-1), scalar(1));
    FAIL() << "expected DynamicsViolation";
  } catch (const DynamicsViolation& e) {
    EXPECT_GT(e.residual(), 1e-5);
  }
}

TEST(DecomposeTest, RejectsIndefiniteSamples) {
  const TimeGrid grid(0.0, 1.0, 16);
  const MatrixTrajectory q = from_function(grid, 1, 1, [](double) {
    Eigen::Matrix2d m;
    m << 0, 1, 1, 0;
    return Eigen::MatrixXd(m);
  });
  EXPECT_THROW(decompose(q, scalar(0), scalar(1)), NotPositiveSemidefinite);
}

}  // namespace
}  // namespace conecert
