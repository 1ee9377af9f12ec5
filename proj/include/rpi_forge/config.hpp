#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rpi_forge/data.hpp"
#include "rpi_forge/geom.hpp"
#include "rpi_forge/noise.hpp"

/// Run configuration (JSON). Every field has a default, so `{}` is a valid
/// config describing the 2-D double-integrator study at T = 100.
namespace rpi_forge::config {

enum class Geometry { kPolytope, kEllipsoid };
enum class Experiment { kSingle, kSweep, kOnedCompare };

const char* to_string(Geometry g);
const char* to_string(Experiment e);

struct SystemConfig {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::VectorXd x0;
};

struct NoiseConfig {
  data::Mode mode = data::Mode::kMeasurement;
  Geometry geometry = Geometry::kPolytope;
  double bound = 0.01;
  std::optional<geom::HPolytope> shape;    // unit-scale polytope, replaces the box
  std::optional<Eigen::MatrixXd> shape_Q;  // unit-scale ellipsoid, replaces the ball

  /// bound * shape (box / ball by default).
  noise::NoiseSet set(Eigen::Index n) const;
  noise::NoiseSet set(Eigen::Index n, double bound_override) const;
};

struct DataConfig {
  Eigen::Index T = 100;
  double input_range = 3.0;
  std::uint64_t seed = 1;
};

struct AlgoConfig {
  std::optional<double> eps;
  double eps_factor = 1e-4;
  int directions = 16;
  double gamma_tol = 1e-4;
  double gamma_cap = 1e3;
  double rho = 1.0;
  double feasibility_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iter = 1000;
  std::size_t probes = 1000;
  std::optional<double> fixed_P;  // scalar multiple of I held fixed in synthesis
};

struct ExperimentConfig {
  Experiment kind = Experiment::kSingle;
  std::vector<Eigen::Index> T_grid;
  std::vector<double> vbar_grid;
};

struct OutputConfig {
  std::string dir = "out";
  bool svg = true;
};

struct RunConfig {
  SystemConfig system;
  NoiseConfig noise;
  DataConfig data;
  AlgoConfig algo;
  ExperimentConfig experiment;
  OutputConfig output;

  Eigen::Index n() const { return system.A.rows(); }
  Eigen::Index m() const { return system.B.cols(); }
};

/// 10 geometrically spaced integers in [lo, hi], rounded and deduplicated.
std::vector<Eigen::Index> log_grid(Eigen::Index lo, Eigen::Index hi, int points = 10);
std::vector<double> default_vbar_grid();
/// 0.01, 0.02, ..., 0.20.
std::vector<double> default_oned_grid();

/// Parses and validates; every problem is a kConfig error naming the field.
RunConfig parse(const nlohmann::json& j);
RunConfig load(const std::string& path);
void validate(const RunConfig& cfg);

nlohmann::json to_json(const RunConfig& cfg);

}  // namespace rpi_forge::config
