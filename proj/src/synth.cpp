#include "rpi_forge/synth.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "rpi_forge/error.hpp"

namespace rpi_forge::synth {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

const char* to_string(Method method) {
  return method == Method::kVertex ? "vertex" : "sproc";
}

namespace {

// Decision variables shared by both programs: P (symmetric basis, absent when
// P is fixed), Y entrywise, beta.
struct Layout {
  Index n = 0;
  Index m = 0;
  bool fixed_P = false;
  MatrixXd P0;
  std::vector<MatrixXd> p_basis;
  int p_first = 0;
  int y_first = 0;
  int beta = 0;

  int num_p() const { return static_cast<int>(p_basis.size()); }
  MatrixXd y_basis(int k) const {
    MatrixXd E = MatrixXd::Zero(m, n);
    E(k / n, k % n) = 1.0;
    return E;
  }
  MatrixXd P(const VectorXd& x) const {
    MatrixXd out = fixed_P ? P0 : MatrixXd::Zero(n, n);
    for (int k = 0; k < num_p(); ++k) out += x(p_first + k) * p_basis[k];
    return out;
  }
  MatrixXd Y(const VectorXd& x) const {
    MatrixXd out(m, n);
    for (Index r = 0; r < m; ++r)
      for (Index c = 0; c < n; ++c) out(r, c) = x(y_first + static_cast<int>(r * n + c));
    return out;
  }
};

Layout make_layout(conic::ConicProblem& problem, Index n, Index m, const SynthOptions& options) {
  require(options.rho > 0.0, ErrorCode::kInvalidArgument, "synthesis: rho must be positive");
  Layout L;
  L.n = n;
  L.m = m;
  if (options.fixed_P) {
    require(options.fixed_P->rows() == n && geom::is_spd(*options.fixed_P),
            ErrorCode::kInvalidArgument, "synthesis: fixed P must be SPD of size n");
    L.fixed_P = true;
    L.P0 = *options.fixed_P;
  } else {
    for (Index i = 0; i < n; ++i) {
      for (Index j = i; j < n; ++j) {
        MatrixXd E = MatrixXd::Zero(n, n);
        E(i, j) = 1.0;
        E(j, i) = 1.0;
        L.p_basis.push_back(E);
      }
    }
    L.p_first = problem.add_variables(L.num_p());
  }
  L.y_first = problem.add_variables(static_cast<int>(m * n));
  L.beta = problem.add_variable();
  problem.set_objective(L.beta, 1.0);
  // beta >= -rho; without it (beta, tau) -> (-inf, +inf) is a recession
  // direction of the phase-one barrier.
  problem.add_linear({{L.beta, 1.0}}, options.rho);

  if (!L.fixed_P) {
    const double rho = options.rho;
    const double mu = options.mu_ratio * rho;
    conic::LmiBlock lower(-mu * MatrixXd::Identity(n, n));
    conic::LmiBlock upper(rho * MatrixXd::Identity(n, n));
    for (int k = 0; k < L.num_p(); ++k) {
      lower.add_term(L.p_first + k, L.p_basis[k]);
      upper.add_term(L.p_first + k, -L.p_basis[k]);
    }
    problem.add_block(std::move(lower));
    problem.add_block(std::move(upper));
  }
  return L;
}

VectorXd initial_point(const conic::ConicProblem& problem, const Layout& L, double rho,
                       double mu, double beta) {
  VectorXd x = VectorXd::Zero(problem.num_variables());
  if (!L.fixed_P) {
    const double p0 = 0.5 * (rho + mu);
    int k = 0;
    for (Index i = 0; i < L.n; ++i)
      for (Index j = i; j < L.n; ++j, ++k)
        if (i == j) x(L.p_first + k) = p0;
  }
  x(L.beta) = beta;
  return x;
}

Certificate extract(const conic::Solution& sol, const Layout& L, Method method,
                    const SynthOptions& options) {
  const conic::SolveReport& rep = sol.report;
  if (rep.status == conic::SolveStatus::kInfeasible)
    fail(ErrorCode::kNotStabilizable, "synthesis LMI infeasible: no common contraction certificate");
  if (rep.status == conic::SolveStatus::kUnbounded)
    fail(ErrorCode::kSolver, "synthesis SDP reported unbounded despite normalization");
  if (rep.status != conic::SolveStatus::kOptimal)
    fail(ErrorCode::kSolver, std::string("synthesis SDP failed: ") + conic::to_string(rep.status));

  Certificate cert;
  cert.method = method;
  cert.report = rep;
  cert.P = L.P(sol.x);
  cert.P = 0.5 * (cert.P + cert.P.transpose());
  cert.Y = L.Y(sol.x);
  cert.beta = sol.x(L.beta);
  if (cert.beta < options.beta_min)
    fail(ErrorCode::kNotStabilizable,
         "certified contraction margin beta = " + std::to_string(cert.beta) +
             " is below the minimum; set not robustly stabilizable by this certificate");
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cert.P, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues()(0);
  const double hi = eig.eigenvalues()(L.n - 1);
  require(lo > 0.0 && hi / lo <= options.max_condition, ErrorCode::kIllConditioned,
          "certificate P is ill-conditioned (cond = " + std::to_string(hi / lo) + ")");
  cert.K = cert.Y * cert.P.inverse();
  return cert;
}

}  // namespace

Certificate synth_vertex(const std::vector<consistency::AbPair>& vertices,
                         const SynthOptions& options) {
  require(!vertices.empty(), ErrorCode::kInvalidArgument, "synth_vertex: no vertices");
  const Index n = vertices[0].A.rows();
  const Index m = vertices[0].B.cols();
  conic::ConicProblem problem;
  const Layout L = make_layout(problem, n, m, options);

  double worst_gain = 0.0;
  double beta0 = 0.0;
  for (const auto& v : vertices) {
    require(v.A.rows() == n && v.A.cols() == n && v.B.rows() == n && v.B.cols() == m,
            ErrorCode::kDimensionMismatch, "synth_vertex: vertex dimensions differ");
    MatrixXd constant = MatrixXd::Zero(2 * n, 2 * n);
    if (L.fixed_P) {
      constant << L.P0, v.A * L.P0, L.P0 * v.A.transpose(), L.P0;
      const MatrixXd schur = L.P0 - v.A * L.P0 * v.A.transpose();
      beta0 = std::min(beta0, Eigen::SelfAdjointEigenSolver<MatrixXd>(schur).eigenvalues()(0));
    }
    conic::LmiBlock block(constant);
    for (int k = 0; k < L.num_p(); ++k) {
      const MatrixXd& E = L.p_basis[k];
      MatrixXd C(2 * n, 2 * n);
      C << E, v.A * E, E * v.A.transpose(), E;
      block.add_term(L.p_first + k, C);
    }
    for (int k = 0; k < static_cast<int>(m * n); ++k) {
      const MatrixXd S = v.B * L.y_basis(k);
      MatrixXd C = MatrixXd::Zero(2 * n, 2 * n);
      C.topRightCorner(n, n) = S;
      C.bottomLeftCorner(n, n) = S.transpose();
      block.add_term(L.y_first + k, C);
    }
    MatrixXd Cb = MatrixXd::Zero(2 * n, 2 * n);
    Cb.topLeftCorner(n, n) = -MatrixXd::Identity(n, n);
    block.add_term(L.beta, Cb);
    problem.add_block(std::move(block));
    worst_gain = std::max(worst_gain, v.A.squaredNorm());
  }

  const double mu = options.mu_ratio * options.rho;
  const double p0 = 0.5 * (options.rho + mu);
  const double start_beta =
      std::max(L.fixed_P ? beta0 - 1.0 : p0 * (1.0 - worst_gain) - 1.0, -0.5 * options.rho);
  const conic::Solution sol =
      conic::solve(problem, options.solver, initial_point(problem, L, options.rho, mu, start_beta));
  Certificate cert = extract(sol, L, Method::kVertex, options);
  validate_certificate(cert, vertices, options.validation_tol);
  return cert;
}

Certificate synth_sproc(const consistency::EllipAb& samples, const SynthOptions& options) {
  const Index n = samples.n;
  const Index m = samples.m;
  const Index N = samples.samples();
  require(N >= 1, ErrorCode::kInvalidArgument, "synth_sproc: no samples");
  require(samples.Qbar.rows() == n && geom::is_spd(samples.Qbar), ErrorCode::kInvalidArgument,
          "synth_sproc: Q must be SPD");
  const Index size = 3 * n + m;
  conic::ConicProblem problem;
  const Layout L = make_layout(problem, n, m, options);
  const int tau_first = problem.add_variables(static_cast<int>(N));

  // Row blocks of the multiplier LMI: [0,n) | [n,2n) | [2n,2n+m) | [2n+m,3n+m).
  const Index r1 = 0, r2 = n, r3 = 2 * n, r4 = 2 * n + m;

  // The LMI is imposed after the congruence T'(.)T with T mapping
  // [I; D'] to [I; Theta'] for Theta = Theta_ls + D S^{-1}: the parameter
  // block is centred at the least-squares fit and scaled by the data norms.
  // Without it the noise level in Xi_i is lost against |z|^2 on long
  // trajectories.
  MatrixXd Zeta(n + m, N);
  Zeta << samples.Z, samples.U;
  const MatrixXd theta_ls =
      Zeta.transpose().completeOrthogonalDecomposition().solve(samples.Znext.transpose()).transpose();
  VectorXd col_scale = Zeta.rowwise().norm();
  for (Index j = 0; j < n + m; ++j)
    if (!(col_scale(j) > 0.0)) col_scale(j) = 1.0;
  MatrixXd T = MatrixXd::Identity(size, size);
  T.block(r2, r1, n + m, n) = theta_ls.transpose();
  T.block(r2, r2, n + m, n + m) = col_scale.cwiseInverse().asDiagonal();
  const auto congruence = [&T](const MatrixXd& C) -> MatrixXd { return T.transpose() * C * T; };

  MatrixXd constant = MatrixXd::Zero(size, size);
  if (L.fixed_P) {
    constant.block(r1, r1, n, n) = L.P0;
    constant.block(r2, r2, n, n) = -L.P0;
    constant.block(r4, r4, n, n) = L.P0;
  }
  conic::LmiBlock block(congruence(constant));
  for (int k = 0; k < L.num_p(); ++k) {
    MatrixXd C = MatrixXd::Zero(size, size);
    C.block(r1, r1, n, n) = L.p_basis[k];
    C.block(r2, r2, n, n) = -L.p_basis[k];
    C.block(r4, r4, n, n) = L.p_basis[k];
    block.add_term(L.p_first + k, congruence(C));
  }
  for (int k = 0; k < static_cast<int>(m * n); ++k) {
    const MatrixXd E = L.y_basis(k);
    MatrixXd C = MatrixXd::Zero(size, size);
    C.block(r2, r3, n, m) = -E.transpose();
    C.block(r3, r2, m, n) = -E;
    C.block(r3, r4, m, n) = E;
    C.block(r4, r3, n, m) = E.transpose();
    block.add_term(L.y_first + k, congruence(C));
  }
  MatrixXd Cb = MatrixXd::Zero(size, size);
  Cb.block(r1, r1, n, n) = -MatrixXd::Identity(n, n);
  block.add_term(L.beta, Cb);

  // Xi_i = Mt diag(Q, -1) Mt'. T'Mt is formed directly (residual of the fit,
  // scaled regressor) and each term scaled to unit Frobenius norm, a
  // positive rescaling of its multiplier.
  VectorXd xi_scale(N);
  MatrixXd D = MatrixXd::Zero(n + 1, n + 1);
  D.topLeftCorner(n, n) = samples.Qbar;
  D(n, n) = -1.0;
  for (Index i = 0; i < N; ++i) {
    MatrixXd Mt = MatrixXd::Zero(size, n + 1);
    Mt.block(r1, 0, n, n) = MatrixXd::Identity(n, n);
    Mt.block(r1, n, n, 1) = samples.Znext.col(i) - theta_ls * Zeta.col(i);
    Mt.block(r2, n, n + m, 1) = -Zeta.col(i).cwiseQuotient(col_scale);
    const MatrixXd Xi = Mt * D * Mt.transpose();
    xi_scale(i) = Xi.norm();
    block.add_term(tau_first + static_cast<int>(i), -Xi / xi_scale(i));
    problem.add_linear({{tau_first + static_cast<int>(i), 1.0}}, 0.0);
  }
  problem.add_block(std::move(block));

  const double mu = options.mu_ratio * options.rho;
  VectorXd start = initial_point(problem, L, options.rho, mu, -0.5 * options.rho);
  start.segment(tau_first, N).setConstant(1.0 / static_cast<double>(N));
  const conic::Solution sol = conic::solve(problem, options.solver, start);
  Certificate cert = extract(sol, L, Method::kSProcedure, options);
  cert.multipliers = sol.x.segment(tau_first, N).cwiseQuotient(xi_scale);
  return cert;
}

ValidationReport validate_certificate(const Certificate& cert,
                                      const std::vector<consistency::AbPair>& probes,
                                      double tol, bool throw_on_failure) {
  ValidationReport report;
  report.probes = probes.size();
  report.worst_residual = -std::numeric_limits<double>::infinity();
  const Index n = cert.P.rows();
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const MatrixXd AK = probes[k].A + probes[k].B * cert.K;
    MatrixXd R = AK * cert.P * AK.transpose() - cert.P + cert.beta * MatrixXd::Identity(n, n);
    R = 0.5 * (R + R.transpose());
    const double top =
        Eigen::SelfAdjointEigenSolver<MatrixXd>(R, Eigen::EigenvaluesOnly).eigenvalues()(n - 1);
    if (top > report.worst_residual) {
      report.worst_residual = top;
      report.worst_probe = k;
    }
  }
  report.passed = probes.empty() || report.worst_residual <= tol;
  if (!report.passed && throw_on_failure)
    fail(ErrorCode::kCertificateInvalid,
         "certificate violated at probe " + std::to_string(report.worst_probe) +
             " (residual eigenvalue " + std::to_string(report.worst_residual) + ")");
  return report;
}

double contraction_bound(const Certificate& cert) {
  const double top = Eigen::SelfAdjointEigenSolver<MatrixXd>(cert.P, Eigen::EigenvaluesOnly)
                         .eigenvalues()
                         .maxCoeff();
  return std::sqrt(std::max(0.0, 1.0 - cert.beta / top));
}

}  // namespace rpi_forge::synth
