#include "rpi_forge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>
#include <thread>

#include "rpi_forge/error.hpp"
#include "rpi_forge/serialize.hpp"
#include "rpi_forge/svg.hpp"

namespace rpi_forge::pipeline {

using config::Geometry;
using config::RunConfig;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(name) + ": " + e.what());
  }
}

synth::SynthOptions synth_options(const RunConfig& cfg) {
  synth::SynthOptions o;
  o.rho = cfg.algo.rho;
  if (cfg.algo.fixed_P) o.fixed_P = *cfg.algo.fixed_P * MatrixXd::Identity(cfg.n(), cfg.n());
  o.solver.feasibility_tol = cfg.algo.feasibility_tol;
  o.solver.gap_tol = cfg.algo.gap_tol;
  return o;
}

rpi::RpiOptions rpi_options(const RunConfig& cfg) {
  rpi::RpiOptions o;
  o.eps = cfg.algo.eps;
  o.eps_factor = cfg.algo.eps_factor;
  o.directions = cfg.algo.directions;
  o.max_iter = cfg.algo.max_iter;
  return o;
}

gamma::GammaOptions gamma_options(const RunConfig& cfg) {
  gamma::GammaOptions o;
  o.tol = cfg.algo.gamma_tol;
  o.cap = cfg.algo.gamma_cap;
  o.directions = cfg.algo.directions;
  return o;
}

std::string num(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body) {
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      body(i);
    }
  };
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
  if (workers <= 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned k = 0; k < workers; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

// A member of an ellipsoidal consistency set to start hit-and-run from: the
// least-squares fit when it qualifies, else the true pair.
std::optional<consistency::AbPair> member_start(const consistency::EllipAb& u,
                                                const RunConfig& cfg) {
  MatrixXd Zeta(u.n + u.m, u.samples());
  Zeta << u.Z, u.U;
  const MatrixXd theta =
      Zeta.transpose().completeOrthogonalDecomposition().solve(u.Znext.transpose()).transpose();
  consistency::AbPair ls{theta.leftCols(u.n), theta.rightCols(u.m)};
  if (consistency::membership(u, ls.A, ls.B)) return ls;
  if (consistency::membership(u, cfg.system.A, cfg.system.B))
    return consistency::AbPair{cfg.system.A, cfg.system.B};
  return std::nullopt;
}

// Noise-free data under an ellipsoidal description: the consistency set is
// the single pair reproducing the data exactly.
consistency::AbPair exact_fit(const data::DataMatrices& dm) {
  MatrixXd Zeta(dm.n() + dm.m(), dm.samples());
  Zeta << dm.X0, dm.U0;
  const MatrixXd theta =
      Zeta.transpose().completeOrthogonalDecomposition().solve(dm.X1.transpose()).transpose();
  const double residual = (dm.X1 - theta * Zeta).cwiseAbs().maxCoeff();
  require(residual <= 1e-9 * std::max(1.0, dm.X1.cwiseAbs().maxCoeff()),
          ErrorCode::kInconsistentData, "noise-free data admit no exact linear model");
  return {theta.leftCols(dm.n()), theta.rightCols(dm.m())};
}

}  // namespace

std::string status_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e))
    if (err->code() == ErrorCode::kNoConvergence) return "no-convergence";
  return "infeasible";
}

unsigned thread_count() {
  if (const char* env = std::getenv("RPI_FORGE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

SingleResult run_single(const RunConfig& cfg, const RunOptions& options) {
  config::validate(cfg);
  SingleResult out;
  const Index n = cfg.n();
  const Index m = cfg.m();
  const bool poly = cfg.noise.geometry == Geometry::kPolytope;
  const bool measurement = cfg.noise.mode == data::Mode::kMeasurement;
  out.noise = cfg.noise.set(n);
  const noise::NoiseSet& N = *out.noise;

  stage("simulate", [&] {
    out.trajectory = data::simulate(cfg.system.A, cfg.system.B, cfg.system.x0, cfg.data.T,
                                    data::uniform_inputs(m, cfg.data.input_range), N,
                                    cfg.noise.mode, cfg.data.seed);
    out.dm = data::build_matrices(out.trajectory);
    const data::RankReport rank = data::rank_check(out.dm);
    require(rank.ok, ErrorCode::kNotEnoughData,
            "data matrix [X0; U0] is rank deficient (smallest singular value " +
                std::to_string(rank.smallest_singular_value) + ")");
  });
  out.completed = Stage::kSimulate;
  if (options.stop_after == Stage::kSimulate) return out;

  double gamma_star = 0.0;
  if (measurement) {
    out.gamma = stage("gamma", [&] {
      return poly ? gamma::certify_gamma_poly(out.dm, N, gamma_options(cfg))
                  : gamma::certify_gamma_ellip(out.dm, N, gamma_options(cfg));
    });
    gamma_star = out.gamma->gamma_star;
  }
  const bool exact = !poly && N.scale() == 0.0;
  if (exact) {
    out.vertices = stage("consistency", [&] { return std::vector{exact_fit(out.dm)}; });
  } else {
    out.uncertainty = stage("consistency", [&]() -> consistency::AbUncertainty {
      if (poly)
        return measurement ? consistency::build_poly_meas(out.dm, N, gamma_star)
                           : consistency::build_poly_process(out.dm, N);
      return measurement ? consistency::build_ellip_meas(out.dm, N, gamma_star)
                         : consistency::build_ellip_process(out.dm, N);
    });
  }
  out.disturbance = measurement ? noise::inflate(N, 1.0 + gamma_star) : N;
  out.completed = measurement ? Stage::kGamma : Stage::kConsistency;
  if (options.stop_after == Stage::kConsistency || options.stop_after == Stage::kGamma) return out;

  noise::Rng rng(data::derive_seed(cfg.data.seed, 0x5eed));
  std::vector<MatrixXd> probe_AK;
  out.certificate = stage("synth", [&] {
    if (poly || exact) {
      if (poly) out.vertices = consistency::vertices_ab(std::get<consistency::PolyAb>(*out.uncertainty));
      synth::Certificate cert = synth::synth_vertex(out.vertices, synth_options(cfg));
      const auto probes = consistency::random_hull_points(out.vertices, options.hull_probes, rng);
      out.validation = synth::validate_certificate(cert, probes, 1e-7);
      for (const auto& p : probes) probe_AK.push_back(p.A + p.B * cert.K);
      return cert;
    }
    const auto& set = std::get<consistency::EllipAb>(*out.uncertainty);
    synth::Certificate cert = synth::synth_sproc(set, synth_options(cfg));
    if (const auto start = member_start(set, cfg)) {
      const auto probes = consistency::sample_members(set, *start, options.member_probes, rng);
      out.validation = synth::validate_certificate(cert, probes, 1e-7);
      for (const auto& p : probes) probe_AK.push_back(p.A + p.B * cert.K);
    }
    return cert;
  });
  out.completed = Stage::kSynth;
  if (options.stop_after == Stage::kSynth) return out;

  stage("rpi", [&] {
    const synth::Certificate& cert = *out.certificate;
    if (poly) {
      const rpi::PolyAK ak = rpi::closed_loop(out.vertices, cert.K);
      out.poly_tube = rpi::iterate_rpi(ak, out.disturbance->vertices(), cert.P, rpi_options(cfg));
      if (!options.secondary_tube) return;
    }
    out.ellip_tube = rpi::ellip_tube(cert.P, cert.beta, *out.disturbance);
    out.ellip_check = rpi::verify_rpi_ellip(*out.ellip_tube, *out.disturbance, cfg.algo.probes,
                                            data::derive_seed(cfg.data.seed, 0xe11), probe_AK);
    require(out.ellip_check->ok(), ErrorCode::kCertificationFailure,
            "ellipsoidal tube fails its invariance check (worst ratio " +
                std::to_string(out.ellip_check->worst_ratio) + ")");
  });
  out.completed = Stage::kRpi;
  return out;
}

void write_single(const SingleResult& r, const RunConfig& cfg, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto path = [&](const char* name) { return (fs::path(dir) / name).string(); };
  serialize::write_json(config::to_json(cfg), path("config.json"));
  data::write_csv(r.trajectory, path("trajectory.csv"));

  nlohmann::json summary = {{"n", cfg.n()},
                            {"m", cfg.m()},
                            {"T", cfg.data.T},
                            {"mode", data::to_string(cfg.noise.mode)},
                            {"geometry", config::to_string(cfg.noise.geometry)},
                            {"bound", cfg.noise.bound}};
  if (r.uncertainty) serialize::write_json(serialize::to_json(*r.uncertainty), path("consistency.json"));
  if (r.gamma) {
    serialize::write_json(serialize::to_json(*r.gamma), path("gamma.json"));
    summary["gamma_star"] = r.gamma->gamma_star;
  }
  if (!r.vertices.empty()) summary["consistency_vertices"] = r.vertices.size();
  if (r.certificate) {
    serialize::write_json(serialize::to_json(*r.certificate), path("certificate.json"));
    summary["beta"] = r.certificate->beta;
    summary["K"] = serialize::to_json(r.certificate->K);
    summary["contraction_bound"] = synth::contraction_bound(*r.certificate);
  }
  if (r.validation)
    summary["certificate_check"] = {{"probes", r.validation->probes},
                                    {"worst_residual", r.validation->worst_residual},
                                    {"passed", r.validation->passed}};
  nlohmann::json tubes = nlohmann::json::object();
  if (r.poly_tube) {
    tubes["polytope"] = serialize::to_json(*r.poly_tube);
    summary["poly_volume"] = r.poly_tube->volume;
    summary["poly_verified"] = true;
  }
  if (r.ellip_tube) {
    tubes["ellipsoid"] = serialize::to_json(*r.ellip_tube);
    summary["ellip_volume"] = r.ellip_tube->volume();
  }
  if (r.ellip_check)
    summary["ellip_check"] = {{"analytic", r.ellip_check->analytic_ok},
                              {"probes", r.ellip_check->probes},
                              {"worst_ratio", r.ellip_check->worst_ratio}};
  if (!tubes.empty()) serialize::write_json(tubes, path("tube.json"));
  serialize::write_json(summary, path("summary.json"));
}

ModelResult run_model(const RunConfig& cfg) {
  return stage("model baseline", [&] {
    ModelResult out;
    const Index n = cfg.n();
    const noise::NoiseSet N = cfg.noise.set(n);
    const bool poly = cfg.noise.geometry == Geometry::kPolytope;
    if (cfg.noise.mode == data::Mode::kMeasurement) {
      out.gamma = poly ? geom::induced_gauge_norm(cfg.system.A, N.shape_polytope())
                       : geom::induced_ellipsoidal_norm(cfg.system.A, N.shape_ellipsoid());
    }
    const noise::NoiseSet D =
        cfg.noise.mode == data::Mode::kMeasurement ? noise::inflate(N, 1.0 + out.gamma) : N;
    const std::vector<consistency::AbPair> truth{{cfg.system.A, cfg.system.B}};
    out.certificate = synth::synth_vertex(truth, synth_options(cfg));
    if (poly) {
      const rpi::PolyAK ak = rpi::closed_loop(truth, out.certificate.K);
      out.poly_tube = rpi::iterate_rpi(ak, D.vertices(), out.certificate.P, rpi_options(cfg));
    }
    out.ellip_tube = rpi::ellip_tube(out.certificate.P, out.certificate.beta, D);
    return out;
  });
}

const SweepCell& SweepResult::cell(const std::string& mode, std::size_t i_vbar,
                                   std::size_t i_T) const {
  const std::size_t block = mode == "polytope" ? 0 : 1;
  return cells.at(block * vbar_grid.size() * T_grid.size() + i_vbar * T_grid.size() + i_T);
}

SweepResult run_sweep(const RunConfig& cfg, unsigned threads) {
  SweepResult out;
  out.T_grid = cfg.experiment.T_grid;
  out.vbar_grid = cfg.experiment.vbar_grid;
  const std::size_t nT = out.T_grid.size();
  const std::size_t nv = out.vbar_grid.size();
  const std::array<Geometry, 2> geometries{Geometry::kPolytope, Geometry::kEllipsoid};

  const auto cell_config = [&](Geometry g, std::size_t iv) {
    RunConfig c = cfg;
    c.noise.geometry = g;
    c.noise.bound = out.vbar_grid[iv];
    c.experiment.kind = config::Experiment::kSingle;
    return c;
  };

  // Model baselines depend on vbar only.
  std::vector<std::optional<ModelResult>> models(2 * nv);
  std::vector<std::string> model_errors(2 * nv);
  parallel_for(2 * nv, threads, [&](std::size_t k) {
    try {
      models[k] = run_model(cell_config(geometries[k / nv], k % nv));
    } catch (const std::exception& e) {
      model_errors[k] = e.what();
    }
  });

  out.cells.resize(2 * nv * nT);
  // Longest trajectories first for load balance; results land in grid order.
  std::vector<std::size_t> order(out.cells.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return out.T_grid[a % nT] > out.T_grid[b % nT];
  });
  parallel_for(order.size(), threads, [&](std::size_t task) {
    const std::size_t k = order[task];
    const std::size_t ig = k / (nv * nT);
    const std::size_t iv = (k / nT) % nv;
    const std::size_t iT = k % nT;
    SweepCell& cell = out.cells[k];
    cell.mode = config::to_string(geometries[ig]);
    cell.T = out.T_grid[iT];
    cell.vbar = out.vbar_grid[iv];
    cell.gamma = cell.beta = cell.vol_dd = cell.vol_model = cell.gap_percent = NAN;
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto& model = models[ig * nv + iv];
      if (!model) fail(ErrorCode::kCertificationFailure, model_errors[ig * nv + iv]);
      RunConfig c = cell_config(geometries[ig], iv);
      c.data.T = cell.T;
      // One trajectory per noise level; shorter T use its prefix.
      c.data.seed = data::derive_seed(cfg.data.seed, iv);
      RunOptions opts;
      opts.secondary_tube = false;
      const SingleResult r = run_single(c, opts);
      cell.gamma = r.gamma ? r.gamma->gamma_star : NAN;
      cell.beta = r.certificate->beta;
      if (geometries[ig] == Geometry::kPolytope) {
        cell.vol_dd = r.poly_tube->volume;
        cell.vol_model = model->poly_tube->volume;
      } else {
        cell.vol_dd = r.ellip_tube->volume();
        cell.vol_model = model->ellip_tube.volume();
      }
      // Equal volumes (both zero included) count as no gap.
      cell.gap_percent = cell.vol_dd == cell.vol_model
                             ? 0.0
                             : 100.0 * (cell.vol_dd - cell.vol_model) / cell.vol_model;
      cell.status = "ok";
    } catch (const std::exception& e) {
      cell.status = status_for(e);
      cell.message = e.what();
    }
    cell.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  return out;
}

std::string sweep_csv(const SweepResult& sweep) {
  std::ostringstream out;
  out << "mode,T,vbar,gamma,beta,vol_dd,vol_model,gap_percent,status\n";
  for (const SweepCell& c : sweep.cells)
    out << c.mode << ',' << c.T << ',' << num(c.vbar) << ',' << num(c.gamma) << ','
        << num(c.beta) << ',' << num(c.vol_dd) << ',' << num(c.vol_model) << ','
        << num(c.gap_percent) << ',' << c.status << '\n';
  return out.str();
}

void write_sweep(const SweepResult& sweep, const RunConfig& cfg, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  serialize::write_json(config::to_json(cfg), (fs::path(dir) / "config.json").string());
  svg::write_file(sweep_csv(sweep), (fs::path(dir) / "sweep.csv").string());

  nlohmann::json log = nlohmann::json::array();
  for (const SweepCell& c : sweep.cells)
    log.push_back({{"mode", c.mode},
                   {"T", c.T},
                   {"vbar", c.vbar},
                   {"status", c.status},
                   {"message", c.message},
                   {"wall_seconds", c.wall_seconds}});
  serialize::write_json(log, (fs::path(dir) / "cells.json").string());
  if (!cfg.output.svg) return;

  for (const std::string mode : {"polytope", "ellipsoid"}) {
    svg::Heatmap h;
    h.title = std::string("Relative tube volume gap (%), ") + mode + " tube";
    h.row_title = "noise bound";
    h.col_title = "T";
    h.log_color = true;
    h.values.resize(static_cast<Index>(sweep.vbar_grid.size()),
                    static_cast<Index>(sweep.T_grid.size()));
    for (std::size_t iv = 0; iv < sweep.vbar_grid.size(); ++iv) {
      h.row_labels.push_back(svg::format_number(sweep.vbar_grid[iv]));
      for (std::size_t iT = 0; iT < sweep.T_grid.size(); ++iT) {
        const SweepCell& c = sweep.cell(mode, iv, iT);
        h.values(static_cast<Index>(iv), static_cast<Index>(iT)) =
            c.status == "ok" ? c.gap_percent : NAN;
      }
    }
    for (const Index T : sweep.T_grid) h.col_labels.push_back(std::to_string(T));
    svg::write_file(svg::render(h), (fs::path(dir) / ("gap_" + mode + ".svg")).string());
  }
}

std::vector<OnedPoint> run_oned_compare(const RunConfig& cfg, unsigned threads) {
  require(cfg.n() == 1 && cfg.m() == 1, ErrorCode::kConfig,
          "oned_compare needs a scalar system");
  std::vector<OnedPoint> out(cfg.experiment.vbar_grid.size());
  synth::SynthOptions so = synth_options(cfg);
  if (!so.fixed_P) so.fixed_P = MatrixXd::Identity(1, 1);

  parallel_for(out.size(), threads, [&](std::size_t k) {
    OnedPoint& p = out[k];
    p.vbar = cfg.experiment.vbar_grid[k];
    p.gamma = p.beta_vertex = p.beta_sproc = p.K_vertex = p.K_sproc = NAN;
    p.c_vertex = p.c_sproc = p.d = p.s2_vertex = p.s2_sproc = NAN;
    try {
      // One trajectory: the same seed for every noise level.
      const noise::NoiseSet V = noise::NoiseSet::box(1, p.vbar);
      const data::Trajectory traj = stage("simulate", [&] {
        return data::simulate(cfg.system.A, cfg.system.B, cfg.system.x0, cfg.data.T,
                              data::uniform_inputs(1, cfg.data.input_range), V,
                              data::Mode::kMeasurement, cfg.data.seed);
      });
      const data::DataMatrices dm = data::build_matrices(traj);
      p.gamma = stage("gamma", [&] {
        return gamma::certify_gamma_poly(dm, V, gamma_options(cfg)).gamma_star;
      });
      p.d = (1.0 + p.gamma) * p.vbar;

      const auto verts = stage("consistency", [&] {
        return consistency::vertices_ab(consistency::build_poly_meas(dm, V, p.gamma));
      });
      const synth::Certificate cv = stage("synth vertex", [&] { return synth::synth_vertex(verts, so); });
      p.beta_vertex = cv.beta;
      p.K_vertex = cv.K(0, 0);
      p.c_vertex = 0.0;
      for (const auto& v : verts)
        p.c_vertex = std::max(p.c_vertex, std::abs(v.A(0, 0) + v.B(0, 0) * p.K_vertex));

      const consistency::EllipAb ell =
          consistency::build_ellip_meas(dm, noise::NoiseSet::ball(1, p.vbar), p.gamma);
      const synth::Certificate cs = stage("synth sproc", [&] { return synth::synth_sproc(ell, so); });
      p.beta_sproc = cs.beta;
      p.K_sproc = cs.K(0, 0);
      p.c_sproc = synth::contraction_bound(cs);

      require(p.c_vertex < 1.0 && p.c_sproc < 1.0, ErrorCode::kNoContraction,
              "closed loop is not contractive");
      p.s2_vertex = 2.0 * p.d / (1.0 - p.c_vertex);
      p.s2_sproc = 2.0 * p.d / (1.0 - p.c_sproc);
      p.status = "ok";
    } catch (const std::exception& e) {
      p.status = status_for(e);
      p.message = e.what();
    }
  });
  return out;
}

std::string oned_csv(const std::vector<OnedPoint>& points) {
  std::ostringstream out;
  out << "vbar,gamma,beta_vertex,beta_sproc,K_vertex,K_sproc,c_vertex,c_sproc,d,"
         "tube_vertex,tube_sproc,status\n";
  for (const OnedPoint& p : points)
    out << num(p.vbar) << ',' << num(p.gamma) << ',' << num(p.beta_vertex) << ','
        << num(p.beta_sproc) << ',' << num(p.K_vertex) << ',' << num(p.K_sproc) << ','
        << num(p.c_vertex) << ',' << num(p.c_sproc) << ',' << num(p.d) << ','
        << num(p.s2_vertex) << ',' << num(p.s2_sproc) << ',' << p.status << '\n';
  return out.str();
}

void write_oned(const std::vector<OnedPoint>& points, const RunConfig& cfg,
                const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  serialize::write_json(config::to_json(cfg), (fs::path(dir) / "config.json").string());
  svg::write_file(oned_csv(points), (fs::path(dir) / "oned_compare.csv").string());
  if (!cfg.output.svg) return;
  svg::LinePlot beta{"Certified margin", "noise bound", "beta", {}, {}};
  svg::LinePlot tube{"mRPI interval length", "noise bound", "2 s_inf", {}, {}};
  svg::Series bv{"vertex LMIs", {}, "#1f77b4"}, bs{"S-procedure", {}, "#d62728"};
  svg::Series tv{"vertex LMIs", {}, "#1f77b4"}, ts{"S-procedure", {}, "#d62728"};
  for (const OnedPoint& p : points) {
    beta.x.push_back(p.vbar);
    tube.x.push_back(p.vbar);
    bv.y.push_back(p.beta_vertex);
    bs.y.push_back(p.beta_sproc);
    tv.y.push_back(p.s2_vertex);
    ts.y.push_back(p.s2_sproc);
  }
  beta.series = {bv, bs};
  tube.series = {tv, ts};
  svg::write_file(svg::render(beta), (fs::path(dir) / "oned_beta.svg").string());
  svg::write_file(svg::render(tube), (fs::path(dir) / "oned_tube.svg").string());
}

}  // namespace rpi_forge::pipeline
