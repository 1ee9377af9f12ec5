#include "rpi_forge/serialize.hpp"

#include <fstream>

#include "rpi_forge/error.hpp"

namespace rpi_forge::serialize {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

json to_json(const MatrixXd& M) {
  json rows = json::array();
  for (Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const VectorXd& v) {
  json out = json::array();
  for (Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

MatrixXd matrix_from_json(const json& j) {
  require(j.is_array(), ErrorCode::kInvalidArgument, "matrix JSON must be an array of rows");
  if (j.empty()) return MatrixXd();
  const Index rows = static_cast<Index>(j.size());
  const Index cols = static_cast<Index>(j[0].size());
  MatrixXd M(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    require(j[r].is_array() && static_cast<Index>(j[r].size()) == cols,
            ErrorCode::kInvalidArgument, "matrix JSON rows must have equal length");
    for (Index c = 0; c < cols; ++c) M(r, c) = j[r][c].get<double>();
  }
  return M;
}

VectorXd vector_from_json(const json& j) {
  require(j.is_array(), ErrorCode::kInvalidArgument, "vector JSON must be an array");
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Index>(k)) = j[k].get<double>();
  return v;
}

json to_json(const geom::HPolytope& h) {
  return {{"normals", to_json(h.normals)}, {"offsets", to_json(h.offsets)}};
}

json to_json(const geom::VPolytope& v) {
  // One vertex per entry reads better than a 2 x N matrix.
  return {{"vertices", to_json(MatrixXd(v.vertices.transpose()))}};
}

json to_json(const consistency::AbUncertainty& u) {
  if (const auto* p = std::get_if<consistency::PolyAb>(&u)) {
    return {{"kind", "polytope"},
            {"n", p->n},
            {"m", p->m},
            {"layout", "theta = row-major vec([A B])"},
            {"halfspaces", to_json(p->set)}};
  }
  const auto& e = std::get<consistency::EllipAb>(u);
  return {{"kind", "ellipsoid"},
          {"n", e.n},
          {"m", e.m},
          {"Z", to_json(e.Z)},
          {"U", to_json(e.U)},
          {"Znext", to_json(e.Znext)},
          {"Q", to_json(e.Qbar)}};
}

json to_json(const gamma::GammaCertificate& g) {
  json trail = json::array();
  for (const auto& s : g.trail)
    trail.push_back({{"gamma", s.gamma}, {"f", s.f}, {"nonempty", s.nonempty}, {"accepted", s.accepted}});
  json j = {{"gamma_star", g.gamma_star},
            {"f_at_gamma", g.f_at_gamma},
            {"bracket", {g.lo, g.hi}},
            {"evaluations", g.evaluations},
            {"ellipsoidal", g.ellipsoidal},
            {"trail", trail}};
  if (g.ellipsoidal) {
    j["kappa"] = g.kappa;
    j["directions"] = g.directions;
    j["gamma_omega"] = g.gamma_omega;
  }
  return j;
}

json to_json(const synth::Certificate& c) {
  const auto& r = c.report;
  return {{"method", synth::to_string(c.method)},
          {"P", to_json(c.P)},
          {"K", to_json(c.K)},
          {"Y", to_json(c.Y)},
          {"beta", c.beta},
          {"tau", to_json(c.multipliers)},
          {"solver",
           {{"status", conic::to_string(r.status)},
            {"objective", r.objective},
            {"primal_residual", r.primal_residual},
            {"dual_residual", r.dual_residual},
            {"gap", r.gap},
            {"newton_steps", r.newton_steps}}}};
}

synth::Certificate certificate_from_json(const json& j) {
  synth::Certificate c;
  try {
    c.P = matrix_from_json(j.at("P"));
    c.K = matrix_from_json(j.at("K"));
    c.Y = j.contains("Y") ? matrix_from_json(j.at("Y")) : MatrixXd(c.K * c.P);
    c.beta = j.at("beta").get<double>();
    if (j.contains("tau")) c.multipliers = vector_from_json(j.at("tau"));
    c.method = j.value("method", "vertex") == "sproc" ? synth::Method::kSProcedure
                                                      : synth::Method::kVertex;
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, std::string("certificate JSON: ") + e.what());
  }
  return c;
}

json to_json(const rpi::PolyTube& t) {
  json radii = json::array();
  for (const double r : t.radii) radii.push_back(r);
  return {{"kind", "polytope"},
          {"V", to_json(t.set)},
          {"H", to_json(t.facets)},
          {"omega", to_json(t.omega.vertices())},
          {"kappa", t.kappa},
          {"c_P", t.c_P},
          {"c_omega", t.c_omega},
          {"directions", t.directions},
          {"eps", t.eps},
          {"inflation", t.inflation},
          {"t_star", t.t_star},
          {"radii", radii},
          {"volume", t.volume}};
}

json to_json(const rpi::EllipTube& t) {
  return {{"kind", "ellipsoid"},
          {"P", to_json(t.P)},
          {"r", t.r},
          {"c", t.c},
          {"dbar", t.dbar},
          {"volume", t.volume()}};
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kInvalidArgument, "cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kConfig, "cannot open '" + path + "'");
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, "'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace rpi_forge::serialize
