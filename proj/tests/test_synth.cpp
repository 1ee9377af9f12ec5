#include <gtest/gtest.h>

#include <cmath>

#include "rpi_forge/consistency.hpp"
#include "rpi_forge/error.hpp"
#include "rpi_forge/gamma.hpp"
#include "rpi_forge/synth.hpp"

using namespace rpi_forge;
using consistency::AbPair;
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
MatrixXd s(double v) { return MatrixXd::Constant(1, 1, v); }

synth::SynthOptions unit_P() {
  synth::SynthOptions o;
  o.fixed_P = MatrixXd::Identity(1, 1);
  return o;
}

data::DataMatrices scalar_data(double vbar, std::uint64_t seed = 1) {
  return data::build_matrices(data::simulate(s(1.1), s(0.6), VectorXd::Zero(1), 100,
                                             data::uniform_inputs(1, 3.0),
                                             noise::NoiseSet::box(1, vbar),
                                             data::Mode::kMeasurement, seed));
}

}  // namespace

TEST(SynthVertex, ScalarDeadbeat) {
  const auto cert = synth::synth_vertex({{s(1.1), s(0.6)}}, unit_P());
  EXPECT_NEAR(cert.K(0, 0), -11.0 / 6.0, 1e-5);
  EXPECT_NEAR(cert.beta, 1.0, 1e-6);
  EXPECT_NEAR(synth::contraction_bound(cert), 0.0, 2e-3);
}

TEST(SynthVertex, ScalarOptimumMatchesClosedForm) {
  // Interval of A with B fixed: max beta = 1 - min_K max_A (a + bK)^2 at P = 1.
  const std::vector<AbPair> verts{{s(1.0), s(0.6)}, {s(1.2), s(0.6)}};
  const auto cert = synth::synth_vertex(verts, unit_P());
  EXPECT_NEAR(cert.K(0, 0), -1.1 / 0.6, 1e-5);
  EXPECT_NEAR(cert.beta, 1.0 - 0.01, 1e-6);
}

TEST(SynthVertex, UncontrollableUnstableRejected) {
  try {
    synth::synth_vertex({{s(1.1), s(0.0)}});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotStabilizable);
  }
}

TEST(SynthVertex, ValidatesOnHullPoints) {
  const auto V = noise::NoiseSet::box(2, 0.01);
  const auto dm = data::build_matrices(data::simulate(A2(), B2(), VectorXd::Zero(2), 100,
                                                      data::uniform_inputs(1, 3.0), V,
                                                      data::Mode::kMeasurement, 3));
  const double g = gamma::certify_gamma_poly(dm, V).gamma_star;
  const auto verts = consistency::vertices_ab(consistency::build_poly_meas(dm, V, g));
  const auto cert = synth::synth_vertex(verts);
  EXPECT_GT(cert.beta, 0.0);
  EXPECT_TRUE(synth::validate_certificate(cert, verts, 1e-8).passed);
  noise::Rng rng(4);
  const auto report = synth::validate_certificate(cert, consistency::random_hull_points(verts, 100, rng), 1e-8);
  EXPECT_TRUE(report.passed);
  EXPECT_EQ(report.probes, 100u);
}

TEST(Validate, ResidualMatchesDirectEigenvalue) {
  synth::Certificate cert;
  cert.P = MatrixXd::Identity(2, 2);
  cert.K = MatrixXd::Zero(1, 2);
  cert.beta = 0.25;
  const AbPair probe{0.5 * MatrixXd::Identity(2, 2), B2()};
  const auto report = synth::validate_certificate(cert, {probe}, 1e-8, false);
  EXPECT_NEAR(report.worst_residual, 0.25 - 0.75, 1e-14);
  EXPECT_TRUE(report.passed);
  cert.beta = 0.8;
  EXPECT_THROW(synth::validate_certificate(cert, {probe}), Error);
}

TEST(SynthSproc, NeverBeatsVertexOnScalarData) {
  for (const double vbar : {0.02, 0.1, 0.2}) {
    const auto dm = scalar_data(vbar);
    const auto V = noise::NoiseSet::box(1, vbar);
    const double g = gamma::certify_gamma_poly(dm, V).gamma_star;
    const auto bv = synth::synth_vertex(
        consistency::vertices_ab(consistency::build_poly_meas(dm, V, g)), unit_P());
    const auto bs = synth::synth_sproc(
        consistency::build_ellip_meas(dm, noise::NoiseSet::ball(1, vbar), g), unit_P());
    EXPECT_LE(bs.beta, bv.beta + 1e-6) << "vbar " << vbar;
    EXPECT_EQ(bs.method, synth::Method::kSProcedure);
    EXPECT_EQ(bs.multipliers.size(), dm.samples());
    EXPECT_TRUE((bs.multipliers.array() >= 0.0).all());
  }
}

TEST(SynthSproc, GapVanishesWithNoise) {
  double last_gap = std::numeric_limits<double>::infinity();
  for (const double vbar : {0.1, 0.01, 0.001}) {
    const auto dm = scalar_data(vbar, 2);
    const auto V = noise::NoiseSet::box(1, vbar);
    const double g = gamma::certify_gamma_poly(dm, V).gamma_star;
    const double bv = synth::synth_vertex(
        consistency::vertices_ab(consistency::build_poly_meas(dm, V, g)), unit_P()).beta;
    const double bs = synth::synth_sproc(
        consistency::build_ellip_meas(dm, noise::NoiseSet::ball(1, vbar), g), unit_P()).beta;
    const double gap = bv - bs;
    EXPECT_LE(gap, last_gap + 1e-9);
    last_gap = gap;
  }
  EXPECT_LT(last_gap, 1e-3);
}

TEST(SynthSproc, TwoDimensionalCertificateHoldsOnMembers) {
  const auto V = noise::NoiseSet::ball(2, 0.01);
  const auto dm = data::build_matrices(data::simulate(A2(), B2(), VectorXd::Zero(2), 100,
                                                      data::uniform_inputs(1, 3.0), V,
                                                      data::Mode::kMeasurement, 5));
  const double g = geom::induced_ellipsoidal_norm(A2(), V.shape_ellipsoid()) * 1.05;
  const auto set = consistency::build_ellip_meas(dm, V, g);
  const auto cert = synth::synth_sproc(set);
  EXPECT_GT(cert.beta, 0.0);
  noise::Rng rng(6);
  const auto members = consistency::sample_members(set, {A2(), B2()}, 300, rng);
  EXPECT_TRUE(synth::validate_certificate(cert, members, 1e-8).passed);
}

TEST(SynthSproc, EmptySampleSetRejected) {
  consistency::EllipAb empty;
  empty.n = 1;
  empty.m = 1;
  empty.Z.resize(1, 0);
  empty.U.resize(1, 0);
  empty.Znext.resize(1, 0);
  empty.Qbar = MatrixXd::Identity(1, 1);
  EXPECT_THROW(synth::synth_sproc(empty), Error);
}
