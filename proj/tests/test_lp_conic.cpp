#include <gtest/gtest.h>

#include <cmath>

#include "rpi_forge/conic.hpp"
#include "rpi_forge/lp.hpp"

using namespace rpi_forge;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST(Lp, MaximizeOverBox) {
  MatrixXd G(4, 2);
  G << 1, 0, -1, 0, 0, 1, 0, -1;
  VectorXd h(4);
  h << 2, 1, 3, 1;
  VectorXd c(2);
  c << 1, 1;
  const lp::Result r = lp::maximize(G, h, c);
  ASSERT_TRUE(r.optimal());
  EXPECT_NEAR(r.objective, 5.0, 1e-9);
  EXPECT_NEAR(r.x(0), 2.0, 1e-9);
  EXPECT_NEAR(r.x(1), 3.0, 1e-9);
}

// Brute force over all pairs of active constraints in the plane.
TEST(Lp, MatchesVertexEnumerationOnRandomPolygons) {
  std::srand(3);
  for (int trial = 0; trial < 30; ++trial) {
    const int q = 8;
    MatrixXd G(q, 2);
    VectorXd h(q);
    for (int i = 0; i < q; ++i) {
      const double a = 2.0 * M_PI * (i + 0.3 * (std::rand() / double(RAND_MAX))) / q;
      G.row(i) << std::cos(a), std::sin(a);
      h(i) = 0.5 + std::rand() / double(RAND_MAX);
    }
    VectorXd c = VectorXd::Random(2);
    double best = -1e300;
    for (int i = 0; i < q; ++i)
      for (int j = i + 1; j < q; ++j) {
        Eigen::Matrix2d M;
        M << G.row(i), G.row(j);
        if (std::abs(M.determinant()) < 1e-12) continue;
        const Eigen::Vector2d x = M.inverse() * (Eigen::Vector2d(h(i), h(j)));
        if (((G * x - h).array() <= 1e-9).all()) best = std::max(best, c.dot(x));
      }
    const lp::Result r = lp::maximize(G, h, c);
    ASSERT_TRUE(r.optimal());
    EXPECT_NEAR(r.objective, best, 1e-8);
  }
}

TEST(Lp, DetectsInfeasibleAndUnbounded) {
  MatrixXd G(2, 1);
  G << 1, -1;
  VectorXd h(2);
  h << -1, -1;  // x <= -1 and x >= 1
  VectorXd c = VectorXd::Ones(1);
  EXPECT_EQ(lp::maximize(G, h, c).status, lp::Status::kInfeasible);
  EXPECT_FALSE(lp::find_feasible_point(G, h).has_value());

  MatrixXd G2(1, 1);
  G2 << -1;
  VectorXd h2 = VectorXd::Zero(1);
  EXPECT_EQ(lp::maximize(G2, h2, c).status, lp::Status::kUnbounded);
}

TEST(Lp, ChebyshevBallOfSquare) {
  MatrixXd G(4, 2);
  G << 1, 0, -1, 0, 0, 1, 0, -1;
  const VectorXd h = VectorXd::Ones(4);
  const auto ball = lp::chebyshev_ball(G, h);
  ASSERT_TRUE(ball);
  EXPECT_NEAR(ball->radius, 1.0, 1e-9);
  EXPECT_NEAR(ball->center.norm(), 0.0, 1e-9);
}

TEST(Conic, TwoByTwoLmi) {
  // max t  s.t. [[1, t], [t, 1]] >= 0  ->  t = 1.
  conic::ConicProblem p;
  const int t = p.add_variable();
  p.set_objective(t, 1.0);
  conic::LmiBlock b(MatrixXd::Identity(2, 2));
  MatrixXd F(2, 2);
  F << 0, 1, 1, 0;
  b.add_term(t, F);
  p.add_block(b);
  const conic::Solution s = conic::solve(p);
  ASSERT_EQ(s.report.status, conic::SolveStatus::kOptimal);
  EXPECT_NEAR(s.x(t), 1.0, 1e-6);
  EXPECT_GE(s.report.min_eigenvalue, 0.0);
}

TEST(Conic, LinearProgramThroughScalarBlocks) {
  conic::ConicProblem p;
  const int x = p.add_variables(2);
  p.set_objective(x, 1.0);
  p.set_objective(x + 1, 2.0);
  p.add_linear({{x, -1.0}, {x + 1, -1.0}}, 4.0);  // x + y <= 4
  p.add_linear({{x, 1.0}}, 0.0);
  p.add_linear({{x + 1, 1.0}}, 0.0);
  p.add_linear({{x + 1, -1.0}}, 3.0);
  const conic::Solution s = conic::solve(p);
  ASSERT_EQ(s.report.status, conic::SolveStatus::kOptimal);
  EXPECT_NEAR(s.report.objective, 7.0, 1e-5);
}

TEST(Conic, MinimumEigenvalueOfSymmetricMatrix) {
  // max s  s.t. A - s I >= 0  ->  s = lambda_min(A).
  MatrixXd A(3, 3);
  A << 4, 1, 0, 1, 3, 1, 0, 1, 2;
  conic::ConicProblem p;
  const int s = p.add_variable();
  p.set_objective(s, 1.0);
  conic::LmiBlock b(A);
  b.add_term(s, -MatrixXd::Identity(3, 3));
  p.add_block(b);
  const conic::Solution sol = conic::solve(p);
  ASSERT_EQ(sol.report.status, conic::SolveStatus::kOptimal);
  const double oracle = Eigen::SelfAdjointEigenSolver<MatrixXd>(A).eigenvalues()(0);
  EXPECT_NEAR(sol.x(s), oracle, 1e-6);
}

TEST(Conic, InfeasibleLmi) {
  // x >= 1 and x <= -1.
  conic::ConicProblem p;
  const int x = p.add_variable();
  p.add_linear({{x, 1.0}}, -1.0);
  p.add_linear({{x, -1.0}}, -1.0);
  EXPECT_EQ(conic::solve(p).report.status, conic::SolveStatus::kInfeasible);
}
