#include <gtest/gtest.h>

#include <cmath>

#include "rpi_forge/consistency.hpp"
#include "rpi_forge/error.hpp"
#include "rpi_forge/gamma.hpp"
#include "rpi_forge/rpi.hpp"
#include "rpi_forge/synth.hpp"

using namespace rpi_forge;
using namespace rpi_forge::rpi;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd s(double v) { return MatrixXd::Constant(1, 1, v); }
geom::VPolytope interval(double lo, double hi) {
  MatrixXd V(1, 2);
  V << lo, hi;
  return geom::VPolytope(V);
}
std::pair<double, double> bounds(const geom::VPolytope& v) {
  return {v.vertices.minCoeff(), v.vertices.maxCoeff()};
}
MatrixXd A2() {
  MatrixXd A(2, 2);
  A << 1, 1, 0, 1;
  return A;
}
MatrixXd B2() {
  MatrixXd B(2, 1);
  B << 0.5, 1;
  return B;
}

}  // namespace

TEST(ClosedLoop, Examples) {
  const auto dead = closed_loop({{s(1.1), s(0.6)}}, s(-11.0 / 6.0));
  ASSERT_EQ(dead.matrices.size(), 1u);
  EXPECT_NEAR(dead.matrices[0](0, 0), 0.0, 1e-15);
  const std::vector<consistency::AbPair> verts{{A2(), B2()}, {2 * A2(), B2()}, {A2(), 2 * B2()}};
  const auto open = closed_loop(verts, MatrixXd::Zero(1, 2));
  ASSERT_EQ(open.matrices.size(), 3u);
  EXPECT_TRUE(open.matrices[1].isApprox(2 * A2()));
}

TEST(PhiStep, Examples) {
  const PolyAK half{{s(0.5)}};
  const auto D = interval(-1, 1);
  const auto seed = phi_step(geom::VPolytope::point(VectorXd::Zero(1)), half, D);
  EXPECT_EQ(bounds(seed), bounds(D));
  const auto next = phi_step(interval(-1, 1), half, D);
  EXPECT_NEAR(bounds(next).first, -1.5, 1e-15);
  EXPECT_NEAR(bounds(next).second, 1.5, 1e-15);
  // Nested inputs, nested outputs.
  const PolyAK two{{s(0.3), s(-0.8)}};
  const auto small = phi_step(interval(-0.5, 0.2), two, D);
  const auto large = phi_step(interval(-1, 1), two, D);
  EXPECT_GE(bounds(small).first, bounds(large).first);
  EXPECT_LE(bounds(small).second, bounds(large).second);
}

TEST(COmega, Examples) {
  const geom::GaugePolytope box(geom::HPolytope::cube(2, 1.0));
  EXPECT_NEAR(c_omega({{MatrixXd::Identity(2, 2)}}, box), 1.0, 1e-12);
  EXPECT_NEAR(c_omega({{MatrixXd::Zero(2, 2)}}, box), 0.0, 1e-12);
  MatrixXd D = MatrixXd::Zero(2, 2);
  D.diagonal() << 0.7, 0.1;
  EXPECT_NEAR(c_omega({{0.5 * MatrixXd::Identity(2, 2), D}}, box), 0.7, 1e-12);
}

TEST(IterateRpi, ScalarGeometricSeries) {
  RpiOptions o;
  o.eps = 1e-6;
  const PolyTube t = iterate_rpi({{s(0.5)}}, interval(-1, 1), s(1.0), o);
  EXPECT_NEAR(bounds(t.set).first, -2.0, 1e-5);
  EXPECT_NEAR(bounds(t.set).second, 2.0, 1e-5);
  EXPECT_TRUE(verify_rpi_poly(t.set, {{s(0.5)}}, interval(-1, 1)).ok);
}

TEST(IterateRpi, ZeroDisturbanceGivesInflatedOmega) {
  const PolyAK ak{{s(0.5)}};
  const PolyTube t = iterate_rpi(ak, geom::VPolytope::point(VectorXd::Zero(1)), s(1.0));
  const auto [lo, hi] = bounds(t.set);
  const auto [olo, ohi] = bounds(t.omega.vertices());
  EXPECT_NEAR(lo, t.inflation * olo, 1e-15);
  EXPECT_NEAR(hi, t.inflation * ohi, 1e-15);
  EXPECT_LE(t.t_star, 1);
}

TEST(IterateRpi, TwoDimensionalMeasurementCaseVerifies) {
  const auto V = noise::NoiseSet::box(2, 0.01);
  const auto dm = data::build_matrices(data::simulate(A2(), B2(), VectorXd::Zero(2), 100,
                                                      data::uniform_inputs(1, 3.0), V,
                                                      data::Mode::kMeasurement, 1));
  const double g = gamma::certify_gamma_poly(dm, V).gamma_star;
  const auto verts = consistency::vertices_ab(consistency::build_poly_meas(dm, V, g));
  const auto cert = synth::synth_vertex(verts);
  const PolyAK ak = closed_loop(verts, cert.K);
  const auto D = noise::inflate(V, 1.0 + g).vertices();
  const PolyTube t = iterate_rpi(ak, D, cert.P);
  EXPECT_TRUE(verify_rpi_poly(t.set, ak, D).ok);
  EXPECT_LT(t.c_omega, 1.0);
  EXPECT_LE(t.kappa * t.c_P, 0.999);
  EXPECT_NEAR(t.volume, geom::volume(t.set), 1e-15);

  const auto shrunk = verify_rpi_poly(geom::scale(t.set, 0.5), ak, D);
  EXPECT_FALSE(shrunk.ok);
  EXPECT_GT(shrunk.max_violation, 0.0);
  ASSERT_EQ(shrunk.witness.size(), 2);
  EXPECT_FALSE(geom::contains_point(geom::scale(t.set, 0.5), shrunk.witness));
}

TEST(IterateRpi, NonContractiveRejected) {
  EXPECT_THROW(iterate_rpi({{s(1.2)}}, interval(-1, 1), s(1.0)), Error);
}

TEST(EllipTube, FormulaAndScaling) {
  const MatrixXd I = MatrixXd::Identity(2, 2);
  const EllipTube t = ellip_tube(I, 0.75, noise::NoiseSet::ellipsoid(I));
  EXPECT_NEAR(t.c, 0.5, 1e-12);
  EXPECT_NEAR(t.dbar, 1.0, 1e-12);
  EXPECT_NEAR(t.r, 2.0, 1e-12);
  const EllipTube d2 = ellip_tube(I, 0.75, noise::NoiseSet::ellipsoid(2 * I));
  EXPECT_NEAR(d2.r, std::sqrt(2.0) * t.r, 1e-12);
  EXPECT_NEAR(d2.c, t.c, 1e-15);
  EXPECT_NEAR(t.volume(), M_PI * 4.0, 1e-12);
}

TEST(EllipTube, Verification) {
  MatrixXd P(2, 2);
  P << 0.7, -0.2, -0.2, 0.5;
  const auto D = noise::NoiseSet::ball(2, 0.1);
  const EllipTube t = ellip_tube(P, 0.2, D);
  const auto ok = verify_rpi_ellip(t, D, 1000, 3);
  EXPECT_TRUE(ok.ok());
  EXPECT_EQ(ok.probes, 1000u);
  EXPECT_LE(ok.worst_ratio, 1.0 + 1e-9);
  EllipTube small = t;
  small.r *= 0.9;
  const auto bad = verify_rpi_ellip(small, D, 1000, 3);
  EXPECT_FALSE(bad.analytic_ok);
  EXPECT_FALSE(bad.ok());
}
