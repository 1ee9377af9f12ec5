#pragma once

#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "rpi_forge/consistency.hpp"
#include "rpi_forge/gamma.hpp"
#include "rpi_forge/rpi.hpp"
#include "rpi_forge/synth.hpp"

/// JSON export of pipeline artifacts. Matrices are arrays of rows.
namespace rpi_forge::serialize {

nlohmann::json to_json(const Eigen::MatrixXd& M);
nlohmann::json to_json(const Eigen::VectorXd& v);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

nlohmann::json to_json(const geom::HPolytope& h);
nlohmann::json to_json(const geom::VPolytope& v);
nlohmann::json to_json(const consistency::AbUncertainty& u);
nlohmann::json to_json(const gamma::GammaCertificate& g);
nlohmann::json to_json(const synth::Certificate& c);
nlohmann::json to_json(const rpi::PolyTube& t);
nlohmann::json to_json(const rpi::EllipTube& t);

synth::Certificate certificate_from_json(const nlohmann::json& j);

/// Pretty-printed with a trailing newline.
void write_json(const nlohmann::json& j, const std::string& path);
nlohmann::json read_json(const std::string& path);

}  // namespace rpi_forge::serialize
