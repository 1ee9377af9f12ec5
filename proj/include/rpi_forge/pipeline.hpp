#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rpi_forge/config.hpp"
#include "rpi_forge/consistency.hpp"
#include "rpi_forge/data.hpp"
#include "rpi_forge/gamma.hpp"
#include "rpi_forge/rpi.hpp"
#include "rpi_forge/synth.hpp"

/// End-to-end runs: trajectory -> consistency set -> (gamma) -> gain -> tubes,
/// the model-based baseline, the (T, vbar) sweep and the scalar comparison.
namespace rpi_forge::pipeline {

enum class Stage { kSimulate, kConsistency, kGamma, kSynth, kRpi };

struct SingleResult {
  data::Trajectory trajectory;
  data::DataMatrices dm;
  std::optional<noise::NoiseSet> noise;        // W or V
  std::optional<gamma::GammaCertificate> gamma;
  std::optional<consistency::AbUncertainty> uncertainty;
  std::vector<consistency::AbPair> vertices;   // polytopic sets only
  std::optional<synth::Certificate> certificate;
  std::optional<synth::ValidationReport> validation;
  std::optional<noise::NoiseSet> disturbance;  // D paired with the consistency set
  std::optional<rpi::PolyTube> poly_tube;
  std::optional<rpi::EllipTube> ellip_tube;
  std::optional<rpi::EllipVerifyReport> ellip_check;
  Stage completed = Stage::kSimulate;
};

struct RunOptions {
  Stage stop_after = Stage::kRpi;
  bool secondary_tube = true;  // ellipsoidal tube from a polytopic certificate too
  std::size_t hull_probes = 1000;
  std::size_t member_probes = 200;
};

/// Errors carry the failing stage in their message.
SingleResult run_single(const config::RunConfig& cfg, const RunOptions& options = {});

/// Writes config.json, trajectory.csv and one JSON file per completed stage.
void write_single(const SingleResult& result, const config::RunConfig& cfg, const std::string& dir);

/// Same synthesis and tube on the singleton {(A*, B*)} with gamma = |A*|_V.
struct ModelResult {
  double gamma = 0.0;
  synth::Certificate certificate;
  std::optional<rpi::PolyTube> poly_tube;
  rpi::EllipTube ellip_tube;
};
ModelResult run_model(const config::RunConfig& cfg);

struct SweepCell {
  std::string mode;  // tube type: polytope | ellipsoid
  Eigen::Index T = 0;
  double vbar = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
  double vol_dd = 0.0;
  double vol_model = 0.0;
  double gap_percent = 0.0;
  double wall_seconds = 0.0;
  std::string status;   // ok | infeasible | no-convergence
  std::string message;  // error text for failed cells
};

struct SweepResult {
  std::vector<Eigen::Index> T_grid;
  std::vector<double> vbar_grid;
  std::vector<SweepCell> cells;  // polytope block then ellipsoid block, vbar-major, T-minor

  const SweepCell& cell(const std::string& mode, std::size_t i_vbar, std::size_t i_T) const;
};

/// Worker count from RPI_FORGE_THREADS, else the hardware concurrency.
unsigned thread_count();

SweepResult run_sweep(const config::RunConfig& cfg, unsigned threads = thread_count());
/// Header mode,T,vbar,gamma,beta,vol_dd,vol_model,gap_percent,status.
std::string sweep_csv(const SweepResult& sweep);
void write_sweep(const SweepResult& sweep, const config::RunConfig& cfg, const std::string& dir);

struct OnedPoint {
  double vbar = 0.0;
  double gamma = 0.0;
  double beta_vertex = 0.0;
  double beta_sproc = 0.0;
  double K_vertex = 0.0;
  double K_sproc = 0.0;
  double c_vertex = 0.0;
  double c_sproc = 0.0;
  double d = 0.0;
  double s2_vertex = 0.0;  // 2 d / (1 - c)
  double s2_sproc = 0.0;
  std::string status;
  std::string message;
};

std::vector<OnedPoint> run_oned_compare(const config::RunConfig& cfg,
                                        unsigned threads = thread_count());
std::string oned_csv(const std::vector<OnedPoint>& points);
void write_oned(const std::vector<OnedPoint>& points, const config::RunConfig& cfg,
                const std::string& dir);

/// Terminal status of a failed cell.
std::string status_for(const std::exception& e);

}  // namespace rpi_forge::pipeline
