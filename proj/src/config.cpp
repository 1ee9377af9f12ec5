#include "rpi_forge/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "rpi_forge/error.hpp"

namespace rpi_forge::config {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

const char* to_string(Geometry g) { return g == Geometry::kPolytope ? "polytope" : "ellipsoid"; }

const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::kSingle: return "single";
    case Experiment::kSweep: return "sweep";
    case Experiment::kOnedCompare: return "oned_compare";
  }
  return "unknown";
}

noise::NoiseSet NoiseConfig::set(Index n) const { return set(n, bound); }

noise::NoiseSet NoiseConfig::set(Index n, double bound_override) const {
  if (geometry == Geometry::kPolytope) {
    if (shape) return noise::NoiseSet::polytope(*shape, bound_override);
    return noise::NoiseSet::box(n, bound_override);
  }
  if (shape_Q) {
    // bound * {z'Q^{-1}z <= 1} has shape bound^2 Q; a zero bound keeps the unit shape.
    if (bound_override == 0.0) return noise::inflate(noise::NoiseSet::ellipsoid(*shape_Q), 0.0);
    return noise::NoiseSet::ellipsoid(bound_override * bound_override * *shape_Q);
  }
  return noise::NoiseSet::ball(n, bound_override);
}

std::vector<Index> log_grid(Index lo, Index hi, int points) {
  std::vector<Index> out;
  for (int k = 0; k < points; ++k) {
    const double t = points == 1 ? 0.0 : static_cast<double>(k) / (points - 1);
    const double v = std::exp(std::log(static_cast<double>(lo)) * (1.0 - t) +
                              std::log(static_cast<double>(hi)) * t);
    const Index r = static_cast<Index>(std::llround(v));
    if (out.empty() || out.back() != r) out.push_back(r);
  }
  return out;
}

std::vector<double> default_vbar_grid() { return {0.001, 0.005, 0.01, 0.05, 0.1}; }

std::vector<double> default_oned_grid() {
  std::vector<double> out;
  for (int k = 1; k <= 20; ++k) out.push_back(k / 100.0);
  return out;
}

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  fail(ErrorCode::kConfig, "config field '" + field + "': " + why);
}

MatrixXd read_matrix(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) bad(field, "expected a nonempty array of rows");
  const Index rows = static_cast<Index>(j.size());
  Index cols = -1;
  MatrixXd M;
  for (Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array()) bad(field, "expected rows to be arrays");
    if (cols < 0) {
      cols = static_cast<Index>(row.size());
      if (cols == 0) bad(field, "empty row");
      M.resize(rows, cols);
    }
    if (static_cast<Index>(row.size()) != cols) bad(field, "ragged rows");
    for (Index c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) bad(field, "non-numeric entry");
      M(r, c) = v.get<double>();
    }
  }
  return M;
}

VectorXd read_vector(const json& j, const std::string& field) {
  if (!j.is_array()) bad(field, "expected an array");
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) bad(field, "non-numeric entry");
    v(static_cast<Index>(k)) = j[k].get<double>();
  }
  return v;
}

template <typename T>
T read_scalar(const json& obj, const char* key, const std::string& field, T fallback) {
  if (!obj.contains(key) || obj[key].is_null()) return fallback;
  const json& v = obj[key];
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) bad(field, "expected a boolean");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) bad(field, "expected a string");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) bad(field, "expected an integer");
  } else {
    if (!v.is_number()) bad(field, "expected a number");
  }
  return v.get<T>();
}

json matrix_json(const MatrixXd& M) {
  json rows = json::array();
  for (Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const VectorXd& v) {
  json out = json::array();
  for (Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

}  // namespace

RunConfig parse(const json& j) {
  if (!j.is_object()) bad("<root>", "expected a JSON object");
  RunConfig cfg;

  const json exp = j.value("experiment", json::object());
  const std::string kind = read_scalar<std::string>(exp, "kind", "experiment.kind", "single");
  if (kind == "single") cfg.experiment.kind = Experiment::kSingle;
  else if (kind == "sweep") cfg.experiment.kind = Experiment::kSweep;
  else if (kind == "oned_compare" || kind == "oned-compare") cfg.experiment.kind = Experiment::kOnedCompare;
  else bad("experiment.kind", "unknown experiment '" + kind + "'");
  const bool oned = cfg.experiment.kind == Experiment::kOnedCompare;

  const json sys = j.value("system", json::object());
  if (sys.contains("A")) {
    cfg.system.A = read_matrix(sys["A"], "system.A");
  } else if (oned) {
    cfg.system.A = MatrixXd::Constant(1, 1, 1.1);
  } else {
    cfg.system.A.resize(2, 2);
    cfg.system.A << 1.0, 1.0, 0.0, 1.0;
  }
  if (sys.contains("B")) {
    cfg.system.B = read_matrix(sys["B"], "system.B");
  } else if (oned) {
    cfg.system.B = MatrixXd::Constant(1, 1, 0.6);
  } else {
    cfg.system.B.resize(2, 1);
    cfg.system.B << 0.5, 1.0;
  }
  cfg.system.x0 = sys.contains("x0") ? read_vector(sys["x0"], "system.x0")
                                     : VectorXd::Zero(cfg.system.A.rows());

  const json nz = j.value("noise", json::object());
  const std::string mode = read_scalar<std::string>(nz, "mode", "noise.mode", "measurement");
  if (mode == "measurement") cfg.noise.mode = data::Mode::kMeasurement;
  else if (mode == "process") cfg.noise.mode = data::Mode::kProcess;
  else bad("noise.mode", "expected 'process' or 'measurement'");
  const std::string geo = read_scalar<std::string>(nz, "geometry", "noise.geometry", "polytope");
  if (geo == "polytope") cfg.noise.geometry = Geometry::kPolytope;
  else if (geo == "ellipsoid") cfg.noise.geometry = Geometry::kEllipsoid;
  else bad("noise.geometry", "expected 'polytope' or 'ellipsoid'");
  cfg.noise.bound = read_scalar<double>(nz, "bound", "noise.bound", 0.01);
  if (nz.contains("set")) {
    const json& set = nz["set"];
    if (cfg.noise.geometry == Geometry::kPolytope) {
      if (!set.contains("normals") || !set.contains("offsets"))
        bad("noise.set", "polytope shape needs 'normals' and 'offsets'");
      cfg.noise.shape = geom::HPolytope(read_matrix(set["normals"], "noise.set.normals"),
                                        read_vector(set["offsets"], "noise.set.offsets"));
    } else {
      if (!set.contains("Q")) bad("noise.set", "ellipsoid shape needs 'Q'");
      cfg.noise.shape_Q = read_matrix(set["Q"], "noise.set.Q");
    }
  }

  const json dat = j.value("data", json::object());
  cfg.data.T = read_scalar<Index>(dat, "T", "data.T", 100);
  cfg.data.input_range = read_scalar<double>(dat, "input_range", "data.input_range", 3.0);
  cfg.data.seed = read_scalar<std::uint64_t>(dat, "seed", "data.seed", 1);

  const json alg = j.value("algo", json::object());
  if (alg.contains("eps") && !alg["eps"].is_null())
    cfg.algo.eps = read_scalar<double>(alg, "eps", "algo.eps", 0.0);
  cfg.algo.eps_factor = read_scalar<double>(alg, "eps_factor", "algo.eps_factor", 1e-4);
  cfg.algo.directions = read_scalar<int>(alg, "M", "algo.M", 16);
  cfg.algo.gamma_tol = read_scalar<double>(alg, "gamma_tol", "algo.gamma_tol", 1e-4);
  cfg.algo.gamma_cap = read_scalar<double>(alg, "gamma_cap", "algo.gamma_cap", 1e3);
  cfg.algo.rho = read_scalar<double>(alg, "rho", "algo.rho", 1.0);
  cfg.algo.feasibility_tol = read_scalar<double>(alg, "feasibility_tol", "algo.feasibility_tol", 1e-8);
  cfg.algo.gap_tol = read_scalar<double>(alg, "gap_tol", "algo.gap_tol", 1e-8);
  cfg.algo.max_iter = read_scalar<int>(alg, "max_iter", "algo.max_iter", 1000);
  cfg.algo.probes = read_scalar<std::size_t>(alg, "probes", "algo.probes", 1000);
  if (alg.contains("fixed_P") && !alg["fixed_P"].is_null())
    cfg.algo.fixed_P = read_scalar<double>(alg, "fixed_P", "algo.fixed_P", 1.0);
  else if (oned)
    cfg.algo.fixed_P = 1.0;

  if (exp.contains("T_grid")) {
    for (const double v : read_vector(exp["T_grid"], "experiment.T_grid"))
      cfg.experiment.T_grid.push_back(static_cast<Index>(std::llround(v)));
  } else if (cfg.experiment.kind == Experiment::kSweep) {
    cfg.experiment.T_grid = log_grid(5, 1000);
  }
  if (exp.contains("vbar_grid")) {
    for (const double v : read_vector(exp["vbar_grid"], "experiment.vbar_grid"))
      cfg.experiment.vbar_grid.push_back(v);
  } else if (cfg.experiment.kind == Experiment::kSweep) {
    cfg.experiment.vbar_grid = default_vbar_grid();
  } else if (oned) {
    cfg.experiment.vbar_grid = default_oned_grid();
  }

  const json out = j.value("output", json::object());
  cfg.output.dir = read_scalar<std::string>(out, "dir", "output.dir", "out");
  cfg.output.svg = read_scalar<bool>(out, "svg", "output.svg", true);

  validate(cfg);
  return cfg;
}

void validate(const RunConfig& cfg) {
  const Index n = cfg.system.A.rows();
  if (cfg.system.A.cols() != n) bad("system.A", "must be square");
  if (cfg.system.B.rows() != n) bad("system.B", "must have as many rows as A");
  if (cfg.system.x0.size() != n) bad("system.x0", "must have length n");
  if (!cfg.system.A.allFinite() || !cfg.system.B.allFinite() || !cfg.system.x0.allFinite())
    bad("system", "entries must be finite");
  const Index m = cfg.system.B.cols();
  const Index min_T = n + m + 2;
  const auto check_T = [&](Index T, const std::string& field) {
    if (T < min_T)
      bad(field, "T = " + std::to_string(T) + " is too short; need T > n+m+1 = " +
                     std::to_string(n + m + 1));
  };
  if (!(cfg.noise.bound >= 0.0) || !std::isfinite(cfg.noise.bound))
    bad("noise.bound", "must be a finite value >= 0");
  if (cfg.noise.shape && cfg.noise.shape->dim() != n) bad("noise.set", "dimension must be n");
  if (cfg.noise.shape_Q && cfg.noise.shape_Q->rows() != n) bad("noise.set", "dimension must be n");
  if (!(cfg.data.input_range >= 0.0)) bad("data.input_range", "must be >= 0");
  if (cfg.algo.eps && !(*cfg.algo.eps > 0.0)) bad("algo.eps", "must be positive");
  if (!(cfg.algo.eps_factor > 0.0)) bad("algo.eps_factor", "must be positive");
  if (cfg.algo.directions < n + 1) bad("algo.M", "need at least n+1 directions");
  if (!(cfg.algo.gamma_tol > 0.0)) bad("algo.gamma_tol", "must be positive");
  if (!(cfg.algo.rho > 0.0)) bad("algo.rho", "must be positive");
  if (cfg.algo.fixed_P && !(*cfg.algo.fixed_P > 0.0)) bad("algo.fixed_P", "must be positive");
  if (cfg.algo.max_iter <= 0) bad("algo.max_iter", "must be positive");

  switch (cfg.experiment.kind) {
    case Experiment::kSingle:
      check_T(cfg.data.T, "data.T");
      break;
    case Experiment::kSweep:
      if (cfg.experiment.T_grid.empty()) bad("experiment.T_grid", "must be nonempty");
      if (cfg.experiment.vbar_grid.empty()) bad("experiment.vbar_grid", "must be nonempty");
      for (const Index T : cfg.experiment.T_grid) check_T(T, "experiment.T_grid");
      break;
    case Experiment::kOnedCompare:
      if (n != 1 || m != 1) bad("system", "oned_compare needs a scalar system (n = m = 1)");
      if (cfg.experiment.vbar_grid.empty()) bad("experiment.vbar_grid", "must be nonempty");
      check_T(cfg.data.T, "data.T");
      break;
  }
  for (const double v : cfg.experiment.vbar_grid)
    if (!(v >= 0.0) || !std::isfinite(v)) bad("experiment.vbar_grid", "entries must be >= 0");
}

RunConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kConfig, "cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, "config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse(j);
}

json to_json(const RunConfig& cfg) {
  json j;
  j["system"] = {{"A", matrix_json(cfg.system.A)},
                 {"B", matrix_json(cfg.system.B)},
                 {"x0", vector_json(cfg.system.x0)}};
  j["noise"] = {{"mode", data::to_string(cfg.noise.mode)},
                {"geometry", to_string(cfg.noise.geometry)},
                {"bound", cfg.noise.bound}};
  if (cfg.noise.shape)
    j["noise"]["set"] = {{"normals", matrix_json(cfg.noise.shape->normals)},
                         {"offsets", vector_json(cfg.noise.shape->offsets)}};
  if (cfg.noise.shape_Q) j["noise"]["set"] = {{"Q", matrix_json(*cfg.noise.shape_Q)}};
  j["data"] = {{"T", cfg.data.T}, {"input_range", cfg.data.input_range}, {"seed", cfg.data.seed}};
  j["algo"] = {{"eps", cfg.algo.eps ? json(*cfg.algo.eps) : json(nullptr)},
               {"eps_factor", cfg.algo.eps_factor},
               {"M", cfg.algo.directions},
               {"gamma_tol", cfg.algo.gamma_tol},
               {"gamma_cap", cfg.algo.gamma_cap},
               {"rho", cfg.algo.rho},
               {"feasibility_tol", cfg.algo.feasibility_tol},
               {"gap_tol", cfg.algo.gap_tol},
               {"max_iter", cfg.algo.max_iter},
               {"probes", cfg.algo.probes},
               {"fixed_P", cfg.algo.fixed_P ? json(*cfg.algo.fixed_P) : json(nullptr)}};
  json Tg = json::array();
  for (const Index T : cfg.experiment.T_grid) Tg.push_back(T);
  j["experiment"] = {{"kind", to_string(cfg.experiment.kind)},
                     {"T_grid", Tg},
                     {"vbar_grid", cfg.experiment.vbar_grid}};
  j["output"] = {{"dir", cfg.output.dir}, {"svg", cfg.output.svg}};
  return j;
}

}  // namespace rpi_forge::config
