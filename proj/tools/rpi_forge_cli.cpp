// rpi-forge: data-driven robust tube construction from one noisy trajectory.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rpi_forge/config.hpp"
#include "rpi_forge/error.hpp"
#include "rpi_forge/pipeline.hpp"
#include "rpi_forge/serialize.hpp"

namespace {

using namespace rpi_forge;

struct Common {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

int exit_code(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kConfig: return 2;
    case ErrorCode::kNoConvergence: return 4;
    default: return 3;
  }
}

config::RunConfig load(const Common& c, const char* kind) {
  nlohmann::json j = nlohmann::json::object();
  if (!c.config_path.empty()) {
    try {
      j = serialize::read_json(c.config_path);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kConfig, c.config_path + ": " + e.what());
    }
  }
  if (!j.is_object()) fail(ErrorCode::kConfig, "<root>: expected a JSON object");
  if (kind && !(j.contains("experiment") && j["experiment"].contains("kind")))
    j["experiment"]["kind"] = kind;
  config::RunConfig cfg = config::parse(j);
  if (!c.out.empty()) cfg.output.dir = c.out;
  if (c.seed) cfg.data.seed = *c.seed;
  config::validate(cfg);
  return cfg;
}

void log(const Common& c, const std::string& line) {
  if (c.verbose) std::cerr << line << '\n';
}

int single(const Common& c, pipeline::Stage stop) {
  const config::RunConfig cfg = load(c, nullptr);
  if (stop == pipeline::Stage::kGamma && cfg.noise.mode != data::Mode::kMeasurement)
    fail(ErrorCode::kConfig, "noise.mode: gamma certification needs measurement noise");
  pipeline::RunOptions opts;
  opts.stop_after = stop;
  opts.hull_probes = cfg.algo.probes;
  const pipeline::SingleResult r = pipeline::run_single(cfg, opts);
  pipeline::write_single(r, cfg, cfg.output.dir);
  if (r.gamma) log(c, "gamma* = " + std::to_string(r.gamma->gamma_star));
  if (r.certificate) log(c, "beta = " + std::to_string(r.certificate->beta));
  if (r.poly_tube)
    log(c, "polytope tube: " + std::to_string(r.poly_tube->set.num_vertices()) +
               " vertices, volume " + std::to_string(r.poly_tube->volume));
  if (r.ellip_tube) log(c, "ellipsoid tube volume " + std::to_string(r.ellip_tube->volume()));
  log(c, "wrote " + cfg.output.dir);
  return 0;
}

int sweep(const Common& c) {
  const config::RunConfig cfg = load(c, "sweep");
  const auto result = pipeline::run_sweep(cfg, pipeline::thread_count());
  pipeline::write_sweep(result, cfg, cfg.output.dir);
  if (c.verbose) std::cerr << pipeline::sweep_csv(result);
  return 0;
}

int oned(const Common& c) {
  const config::RunConfig cfg = load(c, "oned_compare");
  const auto points = pipeline::run_oned_compare(cfg, pipeline::thread_count());
  pipeline::write_oned(points, cfg, cfg.output.dir);
  if (c.verbose) std::cerr << pipeline::oned_csv(points);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust positively invariant tubes from noisy data"};
  app.require_subcommand(1);
  Common common;
  std::function<int()> action;

  const auto add = [&](const char* name, const char* help, std::function<int()> run) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", common.config_path, "JSON run configuration");
    sub->add_option("--out", common.out, "output directory (overrides output.dir)");
    sub->add_option("--seed", common.seed, "random seed (overrides data.seed)");
    sub->add_flag("--verbose", common.verbose, "progress on stderr");
    sub->callback([&action, run] { action = run; });
  };
  using pipeline::Stage;
  add("simulate", "generate the trajectory", [&] { return single(common, Stage::kSimulate); });
  add("consistency", "build the consistency set", [&] { return single(common, Stage::kConsistency); });
  add("gamma", "certify the measurement-noise bound", [&] { return single(common, Stage::kGamma); });
  add("synth", "synthesize the robust feedback", [&] { return single(common, Stage::kSynth); });
  add("rpi", "full pipeline through the invariant tube", [&] { return single(common, Stage::kRpi); });
  add("sweep", "data length and noise level sweep", [&] { return sweep(common); });
  add("oned-compare", "scalar vertex vs S-procedure comparison", [&] { return oned(common); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    return action();
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
