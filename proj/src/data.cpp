#include "rpi_forge/data.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "rpi_forge/error.hpp"

namespace rpi_forge::data {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

const char* to_string(Mode mode) {
  return mode == Mode::kProcess ? "process" : "measurement";
}

const MatrixXd& Trajectory::observed() const {
  return mode == Mode::kMeasurement ? measured : states;
}

InputLaw uniform_inputs(Index m, double bound) {
  require(bound >= 0.0, ErrorCode::kInvalidArgument, "input bound must be >= 0");
  return [m, bound](Index, noise::Rng& rng) {
    std::uniform_real_distribution<double> unit(-bound, bound);
    VectorXd u(m);
    for (Index i = 0; i < m; ++i) u(i) = unit(rng);
    return u;
  };
}

Trajectory simulate(const MatrixXd& A, const MatrixXd& B, const VectorXd& x0, Index T,
                    const InputLaw& input_law, const noise::NoiseSet& noise, Mode mode,
                    std::uint64_t seed, noise::SampleMode sampling) {
  const Index n = A.rows();
  const Index m = B.cols();
  require(T >= 2, ErrorCode::kInvalidArgument, "simulate: T must be >= 2");
  require(A.cols() == n && B.rows() == n && x0.size() == n && noise.dim() == n,
          ErrorCode::kDimensionMismatch, "simulate: dimension mismatch");

  noise::Rng rng(seed);
  Trajectory traj;
  traj.mode = mode;
  traj.seed = seed;
  traj.inputs.resize(m, T);
  traj.states.resize(n, T);
  traj.states.col(0) = x0;
  if (mode == Mode::kMeasurement) traj.measured.resize(n, T);
  // Draws are made step by step, so a shorter run is a prefix of a longer one.
  for (Index k = 0; k < T; ++k) {
    const VectorXd u = input_law(k, rng);
    require(u.size() == m, ErrorCode::kDimensionMismatch, "simulate: input law dimension");
    traj.inputs.col(k) = u;
    if (k + 1 < T) {
      VectorXd next = A * traj.states.col(k) + B * u;
      if (mode == Mode::kProcess) next += noise::sample(noise, rng, sampling);
      traj.states.col(k + 1) = next;
    }
    if (mode == Mode::kMeasurement)
      traj.measured.col(k) = traj.states.col(k) + noise::sample(noise, rng, sampling);
  }
  return traj;
}

DataMatrices build_matrices(const Trajectory& traj) {
  const Index T = traj.length();
  require(T >= 2, ErrorCode::kNotEnoughData, "build_matrices: T must be >= 2");
  const MatrixXd& z = traj.observed();
  require(z.cols() == T, ErrorCode::kDimensionMismatch, "build_matrices: state/input lengths");
  DataMatrices dm;
  dm.mode = traj.mode;
  dm.X0 = z.leftCols(T - 1);
  dm.X1 = z.rightCols(T - 1);
  dm.U0 = traj.inputs.leftCols(T - 1);
  return dm;
}

RankReport rank_check(const DataMatrices& dm, double relative_tol) {
  const Index rows = dm.n() + dm.m();
  require(dm.samples() >= rows, ErrorCode::kNotEnoughData,
          "rank_check: need at least n+m = " + std::to_string(rows) + " samples, have " +
              std::to_string(dm.samples()));
  MatrixXd Z(rows, dm.samples());
  Z << dm.X0, dm.U0;
  Eigen::JacobiSVD<MatrixXd> svd(Z);
  const VectorXd& s = svd.singularValues();
  RankReport report;
  report.largest_singular_value = s(0);
  report.smallest_singular_value = s(rows - 1);
  report.ok = s(0) > 0.0 && s(rows - 1) > relative_tol * s(0);
  return report;
}

void write_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::kConfig, "cannot write " + path);
  const bool meas = traj.mode == Mode::kMeasurement;
  const MatrixXd& z = traj.observed();
  out << "k";
  for (Index i = 0; i < traj.inputs.rows(); ++i) out << ",u" << i + 1;
  for (Index i = 0; i < z.rows(); ++i) out << (meas ? ",xhat" : ",x") << i + 1;
  out << "\n" << std::setprecision(17);
  for (Index k = 0; k < traj.length(); ++k) {
    out << k;
    for (Index i = 0; i < traj.inputs.rows(); ++i) out << "," << traj.inputs(i, k);
    for (Index i = 0; i < z.rows(); ++i) out << "," << z(i, k);
    out << "\n";
  }
}

Trajectory read_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kConfig, "cannot read " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::kConfig, path + ": empty file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  Index m = 0, n = 0;
  bool meas = false;
  for (const auto& h : header) {
    if (h.rfind("xhat", 0) == 0) {
      meas = true;
      ++n;
    } else if (h.rfind('u', 0) == 0) {
      ++m;
    } else if (h.rfind('x', 0) == 0) {
      ++n;
    }
  }
  require(m > 0 && n > 0 && static_cast<Index>(header.size()) == 1 + m + n, ErrorCode::kConfig,
          path + ": header must be k,u1..um,x1..xn or k,u1..um,xhat1..xhatn");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        fail(ErrorCode::kConfig, path + ": bad number '" + cell + "'");
      }
    }
    require(static_cast<Index>(row.size()) == 1 + m + n, ErrorCode::kConfig,
            path + ": wrong column count");
    rows.push_back(std::move(row));
  }
  const Index T = static_cast<Index>(rows.size());
  Trajectory traj;
  traj.mode = meas ? Mode::kMeasurement : Mode::kProcess;
  traj.inputs.resize(m, T);
  MatrixXd z(n, T);
  for (Index k = 0; k < T; ++k) {
    for (Index i = 0; i < m; ++i) traj.inputs(i, k) = rows[k][1 + i];
    for (Index i = 0; i < n; ++i) z(i, k) = rows[k][1 + m + i];
  }
  (meas ? traj.measured : traj.states) = z;
  return traj;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 of the pair
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace rpi_forge::data
