#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rpi_forge/error.hpp"
#include "rpi_forge/geom.hpp"

using namespace rpi_forge;
using namespace rpi_forge::geom;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

VectorXd v2(double a, double b) { return Vector2d(a, b); }

// Smallest alpha with z in alpha * set, by bisection on halfspace membership.
double bisect_gauge(const HPolytope& set, const VectorXd& z) {
  double lo = 0.0, hi = 1.0;
  while (!set.scaled(hi).contains(z, 0.0)) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (set.scaled(mid).contains(z, 0.0) ? hi : lo) = mid;
  }
  return hi;
}

MatrixXd square_vertices(double s) {
  MatrixXd V(2, 4);
  V << s, -s, -s, s, s, s, -s, -s;
  return V;
}

}  // namespace

TEST(Gauge, Examples) {
  const HPolytope box = HPolytope::cube(2, 2.0);
  EXPECT_DOUBLE_EQ(gauge(box, v2(0, 0)), 0.0);
  EXPECT_NEAR(gauge(box, v2(1, -0.5)), 0.5, 1e-12);
  EXPECT_NEAR(gauge(box, v2(1, -0.5)), bisect_gauge(box, v2(1, -0.5)), 1e-12);
  EXPECT_NEAR(gauge(Ellipsoid(MatrixXd::Identity(2, 2)), v2(3, 4)), 5.0, 1e-12);
}

TEST(Gauge, OriginOutsideInteriorRejected) {
  MatrixXd G(2, 1);
  G << 1, -1;
  Eigen::VectorXd h(2);
  h << 1, 0;
  EXPECT_THROW(GaugePolytope{HPolytope(G, h)}, Error);
}

TEST(InducedNorm, Examples) {
  const GaugePolytope box(HPolytope::cube(2, 1.0));
  EXPECT_NEAR(induced_gauge_norm(MatrixXd::Identity(2, 2), box), 1.0, 1e-12);
  EXPECT_NEAR(induced_gauge_norm(MatrixXd::Zero(2, 2), box), 0.0, 1e-12);
  MatrixXd A(2, 2);
  A << 1, 1, 0, 1;
  double brute = 0.0;
  const MatrixXd V = square_vertices(1.0);
  for (int j = 0; j < 4; ++j) brute = std::max(brute, gauge(box, A * V.col(j)));
  EXPECT_NEAR(induced_gauge_norm(A, box), brute, 1e-12);
  EXPECT_NEAR(brute, 2.0, 1e-12);
}

TEST(InducedNorm, EllipsoidalIsWhitenedSpectralNorm) {
  MatrixXd A(2, 2);
  A << 1, 1, 0, 1;
  EXPECT_NEAR(induced_ellipsoidal_norm(A, MatrixXd::Identity(2, 2)), (1 + std::sqrt(5.0)) / 2, 1e-12);
}

TEST(VertexEnum, BoxAndSimplex) {
  const VPolytope box = vertex_enum(HPolytope::cube(2, 1.0));
  EXPECT_EQ(box.num_vertices(), 4);
  for (Eigen::Index j = 0; j < 4; ++j) EXPECT_NEAR(box.vertices.col(j).cwiseAbs().minCoeff(), 1.0, 1e-12);

  MatrixXd G(4, 3);
  G << -1, 0, 0, 0, -1, 0, 0, 0, -1, 1, 1, 1;
  VectorXd h(4);
  h << 0, 0, 0, 1;
  EXPECT_EQ(vertex_enum(HPolytope(G, h)).num_vertices(), 4);
}

TEST(VertexEnum, RandomPolygonVerticesAreExtremeMembers) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    MatrixXd G(6, 2);
    VectorXd h(6);
    for (int i = 0; i < 6; ++i) {
      const double a = 2 * M_PI * (i + 0.5 * u(rng)) / 6;
      G.row(i) << std::cos(a), std::sin(a);
      h(i) = 0.5 + u(rng);
    }
    const HPolytope H(G, h);
    const VPolytope V = vertex_enum(H);
    for (Eigen::Index j = 0; j < V.num_vertices(); ++j) {
      const VectorXd x = V.vertices.col(j);
      EXPECT_TRUE(H.contains(x, 1e-9));
      // Extreme: at least two active rows with independent normals.
      int active = 0;
      for (int i = 0; i < 6; ++i) active += std::abs(G.row(i).dot(x) - h(i)) < 1e-9;
      EXPECT_GE(active, 2);
    }
  }
}

TEST(Redundancy, DuplicatesAndSlackRows) {
  const HPolytope box = HPolytope::cube(2, 1.0);
  HPolytope twice(MatrixXd(8, 2), VectorXd(8));
  twice.normals << box.normals, box.normals;
  twice.offsets << box.offsets, box.offsets;
  EXPECT_EQ(remove_redundant(twice).num_rows(), 4);

  HPolytope slack(MatrixXd(5, 2), VectorXd(5));
  slack.normals << box.normals, MatrixXd(Eigen::RowVector2d(1, 0));
  slack.offsets << box.offsets, 10.0;
  EXPECT_EQ(remove_redundant(slack).num_rows(), 4);

  const int q = 100;
  MatrixXd G(q, 2);
  for (int i = 0; i < q; ++i) G.row(i) << std::cos(2 * M_PI * i / q), std::sin(2 * M_PI * i / q);
  EXPECT_EQ(remove_redundant(HPolytope(G, VectorXd::Ones(q))).num_rows(), q);
}

TEST(Minkowski, Identities) {
  const VPolytope box(square_vertices(1.0));
  const VPolytope zero = VPolytope::point(VectorXd::Zero(2));
  EXPECT_NEAR(volume(minkowski_sum(box, zero)), 4.0, 1e-12);
  const VPolytope twice = convex_hull(minkowski_sum(box, box));
  EXPECT_EQ(twice.num_vertices(), 4);
  EXPECT_NEAR(volume(twice), 16.0, 1e-12);

  MatrixXd D(2, 4);
  D << 1, 0, -1, 0, 0, 1, 0, -1;
  const VPolytope diamond(D);
  const VPolytope octagon = convex_hull(minkowski_sum(box, diamond));
  EXPECT_EQ(octagon.num_vertices(), 8);
  for (int k = 0; k < 16; ++k) {
    const VectorXd d = v2(std::cos(2 * M_PI * k / 16), std::sin(2 * M_PI * k / 16));
    EXPECT_NEAR(octagon.support(d), box.support(d) + diamond.support(d), 1e-12);
  }
}

TEST(LinearImage, Examples) {
  const VPolytope box(square_vertices(1.0));
  EXPECT_NEAR(volume(linear_image(MatrixXd::Identity(2, 2), box)), 4.0, 1e-12);
  EXPECT_EQ(convex_hull(linear_image(MatrixXd::Zero(2, 2), box)).num_vertices(), 1);
  MatrixXd R(2, 2);
  R << std::cos(0.4), -std::sin(0.4), std::sin(0.4), std::cos(0.4);
  EXPECT_NEAR(volume(linear_image(R, box)), 4.0, 1e-12);
}

TEST(Inclusion, InflatedContainment) {
  const VPolytope t(square_vertices(1.0));
  EXPECT_TRUE(contains_inflated(t, t, 0.0, t));
  const VPolytope s(square_vertices(1.1));
  EXPECT_FALSE(contains_inflated(s, t, 0.05, t));
  EXPECT_TRUE(contains_inflated(s, t, 0.1, t));
  EXPECT_TRUE(contains_inflated(VPolytope(square_vertices(0.5)), t, 0.0, t));
  EXPECT_TRUE(contains_point(t, v2(0.3, -0.9)));
  EXPECT_FALSE(contains_point(t, v2(1.01, 0)));
}

TEST(Circumscribe, SandwichConstant) {
  const Circumscribed four = circumscribe(MatrixXd::Identity(2, 2), 4);
  EXPECT_NEAR(four.kappa, std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(volume(four.omega.vertices()), 4.0, 1e-12);
  const Circumscribed sixteen = circumscribe(MatrixXd::Identity(2, 2), 16);
  EXPECT_NEAR(sixteen.kappa, 1.0 / std::cos(M_PI / 16), 1e-12);
  MatrixXd P = MatrixXd::Zero(2, 2);
  P.diagonal() << 4, 1;
  EXPECT_NEAR(circumscribe(P, 16).kappa, sixteen.kappa, 1e-12);
}

TEST(Volume, Examples) {
  EXPECT_NEAR(volume(VPolytope(square_vertices(0.5))), 1.0, 1e-12);
  EXPECT_NEAR(ellipsoid_volume(MatrixXd::Identity(2, 2), 1.0), M_PI, 1e-12);
  MatrixXd T(2, 3);
  T << 0, 4, 1, 0, 0, 3;
  EXPECT_NEAR(volume(VPolytope(T)), 6.0, 1e-12);  // shoelace
}

TEST(FacetEnum, SquareFacets) {
  const HPolytope H = facet_enum(VPolytope(square_vertices(2.0)));
  EXPECT_EQ(H.num_rows(), 4);
  EXPECT_NEAR(H.offsets.maxCoeff(), 2.0, 1e-12);
  EXPECT_NEAR(H.offsets.minCoeff(), 2.0, 1e-12);
}
