#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "rpi_forge/config.hpp"
#include "rpi_forge/error.hpp"
#include "rpi_forge/pipeline.hpp"
#include "rpi_forge/serialize.hpp"
#include "rpi_forge/svg.hpp"

using namespace rpi_forge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rpi_forge_test_" + name);
  fs::remove_all(p);
  return p;
}

svg::Heatmap sample_heatmap() {
  svg::Heatmap h;
  h.title = "gap";
  h.row_title = "noise bound";
  h.col_title = "T";
  h.row_labels = {"0.01", "0.1"};
  h.col_labels = {"10", "100", "1000"};
  h.values.resize(2, 3);
  h.values << 5.0, 2.0, 1.0, 40.0, NAN, 8.0;
  return h;
}

svg::LinePlot sample_plot() {
  return {"tube length", "noise bound", "2 s", {0.0, 0.1, 0.2},
          {{"vertex", {0.0, 0.4, 0.9}, "#1f77b4"}, {"S-procedure", {0.0, 0.5, 1.1}, "#d62728"}}};
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(RPI_FORGE_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, DefaultsDescribeTheDoubleIntegrator) {
  const auto cfg = config::parse(json::object());
  EXPECT_EQ(cfg.n(), 2);
  EXPECT_EQ(cfg.m(), 1);
  EXPECT_EQ(cfg.data.T, 100);
  EXPECT_EQ(cfg.noise.mode, data::Mode::kMeasurement);
  EXPECT_DOUBLE_EQ(cfg.noise.bound, 0.01);
  EXPECT_EQ(cfg.system.x0.size(), 2);
  EXPECT_NO_THROW(config::validate(cfg));
}

TEST(Config, TooShortTrajectoryIsAConfigError) {
  try {
    config::validate(config::parse(json::parse(R"({"data": {"T": 4}})")));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    EXPECT_NE(std::string(e.what()).find("data.T"), std::string::npos);
  }
}

TEST(Config, BadFieldsNamed) {
  for (const char* text : {R"({"noise": {"bound": -1}})", R"({"noise": {"geometry": "blob"}})",
                           R"({"system": {"A": [[1, 0]]}})", R"({"experiment": {"kind": "x"}})"}) {
    EXPECT_THROW(config::validate(config::parse(json::parse(text))), Error) << text;
  }
}

TEST(Config, GridsAndRoundTrip) {
  const auto grid = config::log_grid(5, 1000);
  EXPECT_EQ(grid.size(), 10u);
  EXPECT_EQ(grid.front(), 5);
  EXPECT_EQ(grid.back(), 1000);
  EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
  const auto cfg = config::parse(json::parse(R"({"experiment": {"kind": "sweep"}})"));
  EXPECT_EQ(cfg.experiment.T_grid, grid);
  EXPECT_EQ(cfg.experiment.vbar_grid, config::default_vbar_grid());
  const auto again = config::parse(config::to_json(cfg));
  EXPECT_EQ(config::to_json(again), config::to_json(cfg));
}

TEST(Svg, HeatmapCells) {
  svg::Heatmap one;
  one.title = "one";
  one.row_labels = {"r"};
  one.col_labels = {"c"};
  one.values = Eigen::MatrixXd::Constant(1, 1, 3.0);
  const std::string out = svg::render(one);
  EXPECT_EQ(std::count(out.begin(), out.end(), '\n') > 0, true);
  size_t rects = 0;
  for (size_t p = out.find("<rect"); p != std::string::npos; p = out.find("<rect", p + 1)) ++rects;
  EXPECT_EQ(rects, 1u);
  EXPECT_THROW(svg::render(svg::Heatmap{}), Error);
  EXPECT_THROW(svg::render(svg::LinePlot{}), Error);
}

TEST(Svg, MonotoneSeriesMonotonePolyline) {
  const std::string out = svg::render(sample_plot());
  const std::regex polyline("points=\"([^\"]*)\"");
  std::smatch m;
  ASSERT_TRUE(std::regex_search(out, m, polyline));
  std::istringstream pts(m[1].str());
  std::string pair;
  double last_x = -1e300, last_y = 1e300;
  while (pts >> pair) {
    const double x = std::stod(pair.substr(0, pair.find(',')));
    const double y = std::stod(pair.substr(pair.find(',') + 1));
    EXPECT_GT(x, last_x);
    EXPECT_LT(y, last_y);  // larger values sit higher on the page
    last_x = x;
    last_y = y;
  }
}

TEST(Svg, GoldenFiles) {
  EXPECT_EQ(svg::render(sample_heatmap()), slurp(RPI_FORGE_GOLDEN_DIR "/heatmap.svg"));
  EXPECT_EQ(svg::render(sample_plot()), slurp(RPI_FORGE_GOLDEN_DIR "/lineplot.svg"));
}

TEST(Serialize, CertificateRoundTrip) {
  synth::Certificate c;
  c.P = Eigen::MatrixXd::Identity(2, 2);
  c.K = Eigen::MatrixXd::Constant(1, 2, -0.5);
  c.Y = c.K;
  c.beta = 0.3;
  const auto back = serialize::certificate_from_json(serialize::to_json(c));
  EXPECT_TRUE(back.P.isApprox(c.P));
  EXPECT_TRUE(back.K.isApprox(c.K));
  EXPECT_DOUBLE_EQ(back.beta, c.beta);
}

TEST(Pipeline, SingleRunProducesVerifiedTubes) {
  const auto cfg = config::parse(json::object());
  const auto r = pipeline::run_single(cfg);
  EXPECT_EQ(r.completed, pipeline::Stage::kRpi);
  ASSERT_TRUE(r.gamma && r.certificate && r.poly_tube && r.ellip_tube);
  EXPECT_GE(r.gamma->gamma_star, 2.0 - 1e-4);
  ASSERT_TRUE(r.validation);
  EXPECT_TRUE(r.validation->passed);
  const auto ak = rpi::closed_loop(r.vertices, r.certificate->K);
  EXPECT_TRUE(rpi::verify_rpi_poly(r.poly_tube->set, ak, r.disturbance->vertices()).ok);
  EXPECT_TRUE(r.ellip_check->ok());

  const fs::path dir = scratch("single");
  pipeline::write_single(r, cfg, dir.string());
  for (const char* f : {"config.json", "trajectory.csv", "consistency.json", "gamma.json",
                        "certificate.json", "tube.json", "summary.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  fs::remove_all(dir);
}

TEST(Pipeline, StageErrorsCarryTheStageName) {
  auto cfg = config::parse(json::parse(R"({"system": {"A": [[1.1]], "B": [[0]]}, "data": {"T": 20}})"));
  try {
    pipeline::run_single(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("gamma:", 0), 0u) << e.what();
  }
}

TEST(Pipeline, NoiseFreeLimit) {
  const auto cfg = config::parse(json::parse(R"({"noise": {"bound": 0}})"));
  const auto r = pipeline::run_single(cfg);
  EXPECT_NEAR(r.gamma->gamma_star, 2.0, 1e-3);
  const auto model = pipeline::run_model(cfg);
  EXPECT_NEAR(r.poly_tube->volume, model.poly_tube->volume, 1e-3 * model.poly_tube->volume);
}

TEST(Sweep, ByteReproducibleAndThreadIndependent) {
  const auto cfg = config::parse(json::parse(
      R"({"experiment": {"kind": "sweep", "T_grid": [20, 60], "vbar_grid": [0, 0.01]}})"));
  const auto a = pipeline::run_sweep(cfg, 1);
  const auto b = pipeline::run_sweep(cfg, 3);
  EXPECT_EQ(pipeline::sweep_csv(a), pipeline::sweep_csv(b));
  ASSERT_EQ(a.cells.size(), 8u);
  for (const auto& c : a.cells) {
    EXPECT_EQ(c.status, "ok") << c.mode << " T=" << c.T << " " << c.message;
    EXPECT_LE(c.vol_model, c.vol_dd * (1 + 1e-9) + 1e-15);
    if (c.vbar == 0.0) EXPECT_LT(std::abs(c.gap_percent), 0.1);
  }
  const std::string csv = pipeline::sweep_csv(a);
  EXPECT_EQ(csv.rfind("mode,T,vbar,gamma,beta,vol_dd,vol_model,gap_percent,status\n", 0), 0u);
  EXPECT_EQ(csv.find('\r'), std::string::npos);

  const fs::path dir = scratch("sweep");
  pipeline::write_sweep(a, cfg, dir.string());
  EXPECT_EQ(slurp((dir / "sweep.csv").string()), csv);
  EXPECT_TRUE(fs::exists(dir / "gap_polytope.svg"));
  EXPECT_TRUE(fs::exists(dir / "gap_ellipsoid.svg"));
  fs::remove_all(dir);
}

TEST(Sweep, FailedCellsKeepAStatus) {
  // Tiny T with large noise: not every cell certifies, none aborts the sweep.
  const auto cfg = config::parse(json::parse(
      R"({"experiment": {"kind": "sweep", "T_grid": [5], "vbar_grid": [0.3]}})"));
  const auto s = pipeline::run_sweep(cfg, 1);
  for (const auto& c : s.cells) {
    EXPECT_TRUE(c.status == "ok" || c.status == "infeasible" || c.status == "no-convergence");
    if (c.status != "ok") EXPECT_FALSE(c.message.empty());
  }
}

TEST(OnedCompare, OrderingOnCoarseGrid) {
  const auto cfg = config::parse(json::parse(
      R"({"experiment": {"kind": "oned_compare", "vbar_grid": [0.001, 0.05, 0.2]}})"));
  const auto pts = pipeline::run_oned_compare(cfg, 2);
  ASSERT_EQ(pts.size(), 3u);
  for (const auto& p : pts) {
    ASSERT_EQ(p.status, "ok") << p.message;
    EXPECT_GE(p.beta_vertex, p.beta_sproc - 1e-6);
    EXPECT_GE(p.s2_sproc, p.s2_vertex - 1e-6);
    EXPECT_NEAR(p.d, (1 + p.gamma) * p.vbar, 1e-15);
  }
  // Near-deadbeat data: both contraction factors vanish with the noise.
  EXPECT_LT(pts[0].c_vertex, 1e-2);
  EXPECT_LT(pts[0].c_sproc, 5e-2);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  fs::create_directories(dir);
  const std::string cfg_ok = (dir / "ok.json").string();
  const std::string cfg_bad = (dir / "bad.json").string();
  std::ofstream(cfg_ok) << R"({"data": {"T": 30}})";
  std::ofstream(cfg_bad) << R"({"data": {"T": 4}})";
  const std::string out = " --out " + (dir / "out").string();
  EXPECT_EQ(run_cli("simulate --config " + cfg_ok + out), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "trajectory.csv"));
  EXPECT_EQ(run_cli("rpi --config " + cfg_ok + " --seed 3" + out), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "tube.json"));
  EXPECT_EQ(run_cli("rpi --config " + cfg_bad + out), 2);
  EXPECT_EQ(run_cli("rpi --config " + (dir / "missing.json").string() + out), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  std::ofstream(cfg_bad) << R"({"system": {"A": [[1.1]], "B": [[0]]}, "noise": {"mode": "process"}, "data": {"T": 30}})";
  EXPECT_EQ(run_cli("synth --config " + cfg_bad + out), 3);
  fs::remove_all(dir);
}
