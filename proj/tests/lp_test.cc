#include "conecert/lp.h"

#include <gtest/gtest.h>

#include "test_generators.h"

namespace conecert {
namespace {

TEST(LpTest, SmallOptimum) {
  // min -x1 - x2  s.t.  x1 + 2 x2 + s1 = 4, 3 x1 + x2 + s2 = 6.
  lp::LinearProgram p;
  p.A.resize(2, 4);
  p.A << 1, 2, 1, 0, 3, 1, 0, 1;
  p.b = Eigen::Vector2d(4, 6);
  p.c = Eigen::Vector4d(-1, -1, 0, 0);
  const lp::Solution s = lp::solve(p);
  ASSERT_EQ(s.status, lp::Status::kOptimal);
  EXPECT_NEAR(s.objective, -2.8, 1e-12);
  EXPECT_NEAR(s.x(0), 1.6, 1e-12);
  EXPECT_NEAR(s.x(1), 1.2, 1e-12);
}

TEST(LpTest, Infeasible) {
  lp::LinearProgram p;
  p.A = Eigen::MatrixXd::Ones(1, 2);
  p.b = Eigen::VectorXd::Constant(1, -1.0);
  p.c = Eigen::VectorXd::Zero(2);
  const lp::Solution s = lp::solve(p);
  EXPECT_EQ(s.status, lp::Status::kInfeasible);
  EXPECT_GT(s.infeasibility, 0.5);
}

TEST(LpTest, Unbounded) {
  lp::LinearProgram p;
  p.A.resize(1, 2);
  p.A << 1, -1;
  p.b = Eigen::VectorXd::Zero(1);
  p.c = Eigen::Vector2d(-1, 0);
  EXPECT_EQ(lp::solve(p).status, lp::Status::kUnbounded);
}

TEST(LpTest, RedundantRows) {
  lp::LinearProgram p;
  p.A.resize(2, 2);
  p.A << 1, 1, 2, 2;
  p.b = Eigen::Vector2d(1, 2);
  p.c = Eigen::Vector2d(1, 2);
  const lp::Solution s = lp::solve(p);
  ASSERT_EQ(s.status, lp::Status::kOptimal);
  EXPECT_NEAR(s.objective, 1.0, 1e-12);
}

TEST(LpTest, RejectsBadShapes) {
  lp::LinearProgram p;
  p.A = Eigen::MatrixXd::Ones(2, 2);
  p.b = Eigen::VectorXd::Ones(3);
  p.c = Eigen::VectorXd::Ones(2);
  EXPECT_THROW(lp::solve(p), std::invalid_argument);
}

TEST(LpTest, FeasiblePointsSatisfyConstraints) {
  testing::Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const int rows = testing::uniform_int(rng, 1, 4);
    const int cols = testing::uniform_int(rng, rows, 8);
    lp::LinearProgram p;
    p.A = testing::normal_matrix(rng, rows, cols);
    const Eigen::VectorXd x0 = testing::normal_vector(rng, cols).cwiseAbs();
    p.b = p.A * x0;
    p.c = testing::normal_vector(rng, cols).cwiseAbs();
    const lp::Solution s = lp::solve(p);
    ASSERT_EQ(s.status, lp::Status::kOptimal);
    EXPECT_LE((p.A * s.x - p.b).norm(), 1e-8 * (1 + p.b.norm()));
    EXPECT_GE(s.x.minCoeff(), -1e-12);
    EXPECT_LE(s.objective, p.c.dot(x0) + 1e-9);
    EXPECT_TRUE(lp::feasible(p.A, p.b));
  }
}

}  // namespace
}  // namespace conecert
