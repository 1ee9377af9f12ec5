#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include <Eigen/Dense>

#include "rpi_forge/noise.hpp"

/// Trajectory generation, data matrices and the persistency-of-excitation
/// check.
namespace rpi_forge::data {

enum class Mode { kProcess, kMeasurement };

const char* to_string(Mode mode);

/// Columns are time steps 0..T-1. `measured` is empty in process mode; in
/// measurement mode `states` may be empty for imported data (truth unknown).
struct Trajectory {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd states;
  Eigen::MatrixXd measured;
  Mode mode = Mode::kProcess;
  std::uint64_t seed = 0;

  Eigen::Index length() const { return inputs.cols(); }
  /// What the data-driven side may see: states or their measurements.
  const Eigen::MatrixXd& observed() const;
};

using InputLaw = std::function<Eigen::VectorXd(Eigen::Index k, noise::Rng& rng)>;

/// i.i.d. uniform inputs on [-bound, bound]^m.
InputLaw uniform_inputs(Eigen::Index m, double bound);

Trajectory simulate(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                    const Eigen::VectorXd& x0, Eigen::Index T, const InputLaw& input_law,
                    const noise::NoiseSet& noise, Mode mode, std::uint64_t seed,
                    noise::SampleMode sampling = noise::SampleMode::kUniform);

/// X0 = [z_0 .. z_{T-2}], X1 = [z_1 .. z_{T-1}], U0 = [u_0 .. u_{T-2}] with z
/// the observed state.
struct DataMatrices {
  Eigen::MatrixXd X0;
  Eigen::MatrixXd X1;
  Eigen::MatrixXd U0;
  Mode mode = Mode::kProcess;

  Eigen::Index n() const { return X0.rows(); }
  Eigen::Index m() const { return U0.rows(); }
  Eigen::Index samples() const { return X0.cols(); }
};

DataMatrices build_matrices(const Trajectory& traj);

struct RankReport {
  bool ok = false;
  double smallest_singular_value = 0.0;
  double largest_singular_value = 0.0;
};

/// Full row rank of [X0; U0] with a tolerance relative to the largest
/// singular value.
RankReport rank_check(const DataMatrices& dm, double relative_tol = 1e-6);

/// CSV with header "k,u1..um,x1..xn" (process) or "k,u1..um,xhat1..xhatn"
/// (measurement).
void write_csv(const Trajectory& traj, const std::string& path);
Trajectory read_csv(const std::string& path);

/// Seed for cell `index` of a sweep, derived from the base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace rpi_forge::data
