#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "rpi_forge/data.hpp"
#include "rpi_forge/error.hpp"
#include "rpi_forge/geom.hpp"
#include "rpi_forge/noise.hpp"

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
data::InputLaw zero_input(Index m) {
  return [m](Index, noise::Rng&) { return VectorXd::Zero(m).eval(); };
}

}  // namespace

TEST(NoiseSet, InflateScalesTheSet) {
  const auto box = noise::NoiseSet::box(2, 0.1);
  EXPECT_TRUE(noise::inflate(box, 1.0).halfspaces().offsets.isApprox(box.halfspaces().offsets));
  EXPECT_NEAR(noise::inflate(box, 3.0).halfspaces().offsets.maxCoeff(), 0.3, 1e-15);
  const auto ell = noise::NoiseSet::ellipsoid(MatrixXd::Identity(2, 2));
  EXPECT_TRUE(noise::inflate(ell, 2.0).shape_matrix().isApprox(4.0 * MatrixXd::Identity(2, 2)));
}

TEST(NoiseSet, Sampling) {
  noise::Rng rng(5);
  const auto zero = noise::NoiseSet::box(2, 0.0);
  EXPECT_EQ(noise::sample(zero, rng).norm(), 0.0);
  const auto box = noise::NoiseSet::box(2, 1.0);
  VectorXd mean = VectorXd::Zero(2);
  for (int k = 0; k < 100000; ++k) {
    const VectorXd v = noise::sample(box, rng);
    if (k < 10000) ASSERT_LE(v.lpNorm<Eigen::Infinity>(), 1.0);
    mean += v;
  }
  EXPECT_LT((mean / 100000.0).lpNorm<Eigen::Infinity>(), 0.02);
  const auto ball = noise::NoiseSet::ball(3, 0.5);
  for (int k = 0; k < 1000; ++k) {
    EXPECT_LE(noise::sample(ball, rng).norm(), 0.5 + 1e-12);
    EXPECT_NEAR(noise::sample(ball, rng, noise::SampleMode::kVertex).norm(), 0.5, 1e-12);
  }
}

TEST(NoiseSet, SupportRadius) {
  const MatrixXd I = MatrixXd::Identity(2, 2);
  EXPECT_NEAR(noise::support_radius(noise::NoiseSet::ellipsoid(I), I), 1.0, 1e-12);
  EXPECT_NEAR(noise::support_radius(noise::NoiseSet::ellipsoid(4 * I), I), 2.0, 1e-12);
  EXPECT_NEAR(noise::support_radius(noise::NoiseSet::box(2, 1.0), I), std::sqrt(2.0), 1e-12);
}

TEST(Simulate, ZeroInputFixedPoints) {
  VectorXd x0(2);
  x0 << 1, 0;
  const auto quiet = noise::NoiseSet::box(2, 0.0);
  const auto traj = data::simulate(A2(), B2(), x0, 20, zero_input(1), quiet, data::Mode::kProcess, 1);
  for (Index k = 0; k < 20; ++k) EXPECT_TRUE(traj.states.col(k).isApprox(x0));

  const auto scalar = data::simulate(MatrixXd::Constant(1, 1, 1.1), MatrixXd::Constant(1, 1, 0.6),
                                     VectorXd::Ones(1), 15, zero_input(1),
                                     noise::NoiseSet::box(1, 0.0), data::Mode::kProcess, 1);
  for (Index k = 0; k < 15; ++k) EXPECT_NEAR(scalar.states(0, k), std::pow(1.1, k), 1e-12);

  const auto meas = data::simulate(A2(), B2(), x0, 20, data::uniform_inputs(1, 3.0), quiet,
                                   data::Mode::kMeasurement, 2);
  EXPECT_TRUE(meas.measured.isApprox(meas.states));
}

TEST(Simulate, ShorterRunIsPrefix) {
  const auto V = noise::NoiseSet::box(2, 0.01);
  for (const auto mode : {data::Mode::kProcess, data::Mode::kMeasurement}) {
    const auto longer = data::simulate(A2(), B2(), VectorXd::Zero(2), 50, data::uniform_inputs(1, 3), V, mode, 9);
    const auto shorter = data::simulate(A2(), B2(), VectorXd::Zero(2), 20, data::uniform_inputs(1, 3), V, mode, 9);
    EXPECT_TRUE(shorter.observed().isApprox(longer.observed().leftCols(20)));
    EXPECT_TRUE(shorter.inputs.isApprox(longer.inputs.leftCols(20)));
  }
}

TEST(DataMatrices, ShapesAndResiduals) {
  const auto quiet = noise::NoiseSet::box(2, 0.0);
  const auto two = data::simulate(A2(), B2(), VectorXd::Zero(2), 2, data::uniform_inputs(1, 3), quiet,
                                  data::Mode::kProcess, 1);
  EXPECT_EQ(data::build_matrices(two).samples(), 1);

  const auto traj = data::simulate(A2(), B2(), VectorXd::Zero(2), 100, data::uniform_inputs(1, 3), quiet,
                                   data::Mode::kProcess, 1);
  const auto dm = data::build_matrices(traj);
  EXPECT_LT((dm.X1 - A2() * dm.X0 - B2() * dm.U0).norm(), 1e-10);

  const auto V = noise::NoiseSet::box(2, 0.05);
  const auto mt = data::simulate(A2(), B2(), VectorXd::Zero(2), 200, data::uniform_inputs(1, 3), V,
                                 data::Mode::kMeasurement, 4);
  const auto mdm = data::build_matrices(mt);
  const double norm = geom::induced_gauge_norm(A2(), V.shape_polytope());
  const auto residual_set = noise::inflate(V, 1.0 + norm);
  const MatrixXd R = mdm.X1 - A2() * mdm.X0 - B2() * mdm.U0;
  for (Index k = 0; k < R.cols(); ++k) EXPECT_TRUE(residual_set.contains(R.col(k), 1e-12));
}

TEST(RankCheck, Cases) {
  const auto quiet = noise::NoiseSet::box(2, 0.0);
  const auto flat = data::simulate(A2(), B2(), VectorXd::Zero(2), 30, zero_input(1), quiet,
                                   data::Mode::kProcess, 1);
  EXPECT_FALSE(data::rank_check(data::build_matrices(flat)).ok);
  const auto rich = data::simulate(A2(), B2(), VectorXd::Zero(2), 100, data::uniform_inputs(1, 3),
                                   noise::NoiseSet::box(2, 0.01), data::Mode::kMeasurement, 1);
  EXPECT_TRUE(data::rank_check(data::build_matrices(rich)).ok);
  // T - 1 = n + m - 1 columns.
  const auto shortrun = data::simulate(A2(), B2(), VectorXd::Zero(2), 3, data::uniform_inputs(1, 3),
                                       quiet, data::Mode::kProcess, 1);
  EXPECT_THROW(data::rank_check(data::build_matrices(shortrun)), Error);
}

TEST(Trajectory, CsvRoundTrip) {
  const auto traj = data::simulate(A2(), B2(), VectorXd::Zero(2), 12, data::uniform_inputs(1, 3),
                                   noise::NoiseSet::box(2, 0.01), data::Mode::kMeasurement, 3);
  const std::string path =
      (std::filesystem::temp_directory_path() / "rpi_forge_traj_test.csv").string();
  data::write_csv(traj, path);
  const auto back = data::read_csv(path);
  std::remove(path.c_str());
  EXPECT_EQ(back.mode, data::Mode::kMeasurement);
  EXPECT_TRUE(back.inputs.isApprox(traj.inputs, 1e-14));
  EXPECT_TRUE(back.observed().isApprox(traj.observed(), 1e-14));
}

TEST(Seeds, DerivedSeedsAreStableAndDistinct) {
  EXPECT_EQ(data::derive_seed(1, 4), data::derive_seed(1, 4));
  EXPECT_NE(data::derive_seed(1, 4), data::derive_seed(1, 5));
  EXPECT_NE(data::derive_seed(1, 4), data::derive_seed(2, 4));
}
