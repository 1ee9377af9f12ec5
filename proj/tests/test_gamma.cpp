#include <gtest/gtest.h>

#include <cmath>

#include "rpi_forge/consistency.hpp"
#include "rpi_forge/error.hpp"
#include "rpi_forge/gamma.hpp"

using namespace rpi_forge;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

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

data::DataMatrices measured(const MatrixXd& A, const MatrixXd& B, Index T, const noise::NoiseSet& V,
                            std::uint64_t seed) {
  return data::build_matrices(data::simulate(A, B, VectorXd::Zero(A.rows()), T,
                                             data::uniform_inputs(B.cols(), 3.0), V,
                                             data::Mode::kMeasurement, seed));
}

}  // namespace

TEST(FPoly, NoiseFreeLimitIsTrueGain) {
  const auto V = noise::NoiseSet::box(2, 1e-7);
  const auto dm = measured(A2(), B2(), 50, noise::NoiseSet::box(2, 0.0), 1);
  EXPECT_NEAR(gamma::f_poly(2.0, dm, V), 2.0, 1e-4);
}

TEST(FPoly, ScalarMatchesIntervalEndpoints) {
  const auto V = noise::NoiseSet::box(1, 0.05);
  const auto dm = measured(MatrixXd::Constant(1, 1, 1.1), MatrixXd::Constant(1, 1, 0.6), 40, V, 2);
  for (const double g : {1.2, 1.5, 3.0}) {
    const auto box = consistency::bounding_box(consistency::build_poly_meas(dm, V, g));
    const double oracle = std::max(std::abs(box.lower(0)), std::abs(box.upper(0)));
    EXPECT_NEAR(gamma::f_poly(g, dm, V), oracle, 1e-8);
  }
}

TEST(FPoly, MonotoneInGamma) {
  const auto V = noise::NoiseSet::box(2, 0.01);
  const auto dm = measured(A2(), B2(), 100, V, 3);
  double last = 0.0;
  for (const double g : {2.0, 2.2, 2.5, 3.0, 4.0}) {
    const double f = gamma::f_poly(g, dm, V);
    EXPECT_GE(f, last - 1e-9);
    last = f;
  }
}

TEST(CertifyPoly, SoundAndTight) {
  const auto V = noise::NoiseSet::box(2, 0.01);
  const auto cert = gamma::certify_gamma_poly(measured(A2(), B2(), 1000, V, 7), V);
  EXPECT_GE(cert.gamma_star, 2.0 - 1e-4);
  EXPECT_LE(cert.gamma_star - 2.0, 0.25);
  EXPECT_LE(cert.f_at_gamma, cert.gamma_star + 1e-9);
}

TEST(CertifyPoly, NoiseFreeDataTinyBound) {
  const auto V = noise::NoiseSet::box(2, 1e-6);
  const auto cert = gamma::certify_gamma_poly(measured(A2(), B2(), 100, noise::NoiseSet::box(2, 0.0), 4), V);
  EXPECT_GE(cert.gamma_star, 2.0 - 1e-4);
  EXPECT_LT(cert.gamma_star - 2.0, 0.05);
}

TEST(CertifyPoly, InconsistentDataFail) {
  const auto V = noise::NoiseSet::box(2, 0.001);
  auto dm = measured(A2(), B2(), 60, V, 5);
  // Next states no linear model explains.
  for (Index k = 0; k < dm.samples(); ++k) dm.X1.col(k) *= (k % 2 == 0 ? 1.0 : -1.0) * (1.0 + 0.1 * k);
  gamma::GammaOptions o;
  o.cap = 50.0;
  EXPECT_THROW(gamma::certify_gamma_poly(dm, V, o), Error);
}

TEST(CertifyEllip, SandwichConstantAndDirections) {
  const auto V = noise::NoiseSet::ball(2, 0.01);
  const auto dm = measured(A2(), B2(), 100, V, 6);
  const auto cert = gamma::certify_gamma_ellip(dm, V);
  EXPECT_NEAR(cert.kappa, 1.0 / std::cos(M_PI / 16), 1e-12);
  EXPECT_GE(cert.gamma_star, geom::induced_ellipsoidal_norm(A2(), V.shape_ellipsoid()) - 1e-4);

  // Finer tangent polytopes never loosen the bound (up to the bracket width).
  double last = std::numeric_limits<double>::infinity();
  for (const int M : {8, 16, 32}) {
    gamma::GammaOptions o;
    o.directions = M;
    const double g = gamma::certify_gamma_ellip(dm, V, o).gamma_star;
    EXPECT_LE(g, last * (1.0 + 2 * o.tol));
    last = g;
  }
}

TEST(CertifyEllip, ScalarCoincidesWithPolytopic) {
  const auto box = noise::NoiseSet::box(1, 0.05);
  const auto ball = noise::NoiseSet::ball(1, 0.05);
  const auto dm = measured(MatrixXd::Constant(1, 1, 1.1), MatrixXd::Constant(1, 1, 0.6), 100, box, 8);
  const double gp = gamma::certify_gamma_poly(dm, box).gamma_star;
  const auto ge = gamma::certify_gamma_ellip(dm, ball);
  EXPECT_NEAR(ge.kappa, 1.0, 1e-12);
  EXPECT_NEAR(ge.gamma_star, gp, 2e-4 * gp);
}
