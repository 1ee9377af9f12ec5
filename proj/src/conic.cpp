#include "rpi_forge/conic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Eigenvalues>

namespace rpi_forge::conic {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kNumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

void LmiBlock::add_term(int variable, const MatrixXd& coefficient) {
  for (std::size_t k = 0; k < variables.size(); ++k) {
    if (variables[k] == variable) {
      coefficients[k] += coefficient;
      return;
    }
  }
  variables.push_back(variable);
  coefficients.push_back(coefficient);
}

int ConicProblem::add_variables(int count) {
  const int first = num_variables_;
  num_variables_ += count;
  objective_.conservativeResize(num_variables_);
  objective_.tail(count).setZero();
  return first;
}

void ConicProblem::set_objective(int variable, double coefficient) {
  objective_(variable) = coefficient;
}

void ConicProblem::add_block(LmiBlock block) { blocks_.push_back(std::move(block)); }

void ConicProblem::add_linear(const std::vector<std::pair<int, double>>& terms,
                              double b) {
  LmiBlock block(MatrixXd::Constant(1, 1, b));
  for (const auto& [variable, a] : terms)
    block.add_term(variable, MatrixXd::Constant(1, 1, a));
  blocks_.push_back(std::move(block));
}

Index ConicProblem::total_dimension() const {
  Index total = 0;
  for (const auto& block : blocks_) total += block.size();
  return total;
}

MatrixXd ConicProblem::evaluate(std::size_t b, const VectorXd& x) const {
  const LmiBlock& block = blocks_[b];
  MatrixXd F = block.constant;
  for (std::size_t k = 0; k < block.variables.size(); ++k)
    F += x(block.variables[k]) * block.coefficients[k];
  return F;
}

double ConicProblem::min_eigenvalue(const VectorXd& x) const {
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const MatrixXd F = evaluate(b, x);
    const double eig =
        F.rows() == 1 ? F(0, 0)
                      : Eigen::SelfAdjointEigenSolver<MatrixXd>(F, Eigen::EigenvaluesOnly)
                            .eigenvalues()(0);
    lowest = std::min(lowest, eig);
  }
  return lowest;
}

namespace {

// -sum_b log det F_b(x), or nothing outside the open cone.
std::optional<double> barrier_value(const ConicProblem& problem, const VectorXd& x) {
  double total = 0.0;
  for (std::size_t b = 0; b < problem.blocks().size(); ++b) {
    const MatrixXd F = problem.evaluate(b, x);
    if (F.rows() == 1) {
      if (!(F(0, 0) > 0.0)) return std::nullopt;
      total -= std::log(F(0, 0));
      continue;
    }
    Eigen::LLT<MatrixXd> llt(F);
    if (llt.info() != Eigen::Success) return std::nullopt;
    const auto diag = llt.matrixLLT().diagonal();
    for (Index i = 0; i < diag.size(); ++i) {
      if (!(diag(i) > 0.0)) return std::nullopt;
      total -= 2.0 * std::log(diag(i));
    }
  }
  return total;
}

// Gradient and Hessian of -sum log det F_b(x). Per block, with F = LL',
// G_k = L^{-1} F_k L^{-T} gives grad_k = -tr G_k and H_kl = <G_k, G_l>.
// The Hessian is kept as diag(d) + U U': 1x1 blocks in a single variable
// feed d, every other block contributes columns of U.
struct BarrierHessian {
  VectorXd d;
  std::vector<VectorXd> factors;  // columns of U, collected lazily
  MatrixXd dense;                 // U U' when assembled densely
  bool is_dense = false;
};

void barrier_derivatives(const ConicProblem& problem, const VectorXd& x, VectorXd& grad,
                         BarrierHessian& hess) {
  const int nv = problem.num_variables();
  grad.setZero(nv);
  hess.d.setZero(nv);
  hess.factors.clear();
  Index rank = 0;
  for (const auto& block : problem.blocks())
    if (!(block.size() == 1 && block.variables.size() == 1)) rank += block.size() * block.size();
  hess.is_dense = 3 * rank >= nv;
  if (hess.is_dense) hess.dense.setZero(nv, nv);

  for (std::size_t b = 0; b < problem.blocks().size(); ++b) {
    const LmiBlock& block = problem.blocks()[b];
    const std::size_t terms = block.variables.size();
    if (terms == 0) continue;
    const MatrixXd F = problem.evaluate(b, x);
    if (F.rows() == 1) {
      const double f = F(0, 0);
      if (terms == 1) {
        const double a = block.coefficients[0](0, 0) / f;
        grad(block.variables[0]) -= a;
        hess.d(block.variables[0]) += a * a;
        continue;
      }
      VectorXd a(terms);
      for (std::size_t k = 0; k < terms; ++k) a(k) = block.coefficients[k](0, 0) / f;
      for (std::size_t k = 0; k < terms; ++k) grad(block.variables[k]) -= a(k);
      if (hess.is_dense) {
        for (std::size_t k = 0; k < terms; ++k)
          for (std::size_t l = 0; l < terms; ++l)
            hess.dense(block.variables[k], block.variables[l]) += a(k) * a(l);
      } else {
        VectorXd u = VectorXd::Zero(nv);
        for (std::size_t k = 0; k < terms; ++k) u(block.variables[k]) += a(k);
        hess.factors.push_back(std::move(u));
      }
      continue;
    }
    const Index s = F.rows();
    Eigen::LLT<MatrixXd> llt(F);
    const auto L = llt.matrixL();
    MatrixXd stacked(s * s, terms);
    for (std::size_t k = 0; k < terms; ++k) {
      const MatrixXd half = L.solve(block.coefficients[k]);
      const MatrixXd G = L.solve(half.transpose());
      grad(block.variables[k]) -= G.trace();
      stacked.col(k) = Eigen::Map<const VectorXd>(G.data(), s * s);
    }
    if (hess.is_dense) {
      const MatrixXd gram = stacked.transpose() * stacked;
      for (std::size_t k = 0; k < terms; ++k)
        for (std::size_t l = 0; l < terms; ++l)
          hess.dense(block.variables[k], block.variables[l]) += gram(k, l);
    } else {
      for (Index r = 0; r < s * s; ++r) {
        VectorXd u = VectorXd::Zero(nv);
        for (std::size_t k = 0; k < terms; ++k) u(block.variables[k]) += stacked(r, k);
        hess.factors.push_back(std::move(u));
      }
    }
  }
}

void densify(BarrierHessian& hess) {
  if (hess.is_dense) return;
  const Index nv = hess.d.size();
  hess.dense.setZero(nv, nv);
  for (const VectorXd& u : hess.factors) hess.dense.selfadjointView<Eigen::Lower>().rankUpdate(u);
  hess.dense = hess.dense.selfadjointView<Eigen::Lower>();
  hess.is_dense = true;
}

// Solves (diag(d) + U U' + reg I) dx = rhs. The structured path eliminates
// the variables with a diagonal term by the Woodbury identity and solves the
// (few) remaining ones through their Schur complement.
VectorXd newton_direction(BarrierHessian& hess, const VectorXd& rhs) {
  const Index nv = rhs.size();
  constexpr double kReg = 1e-13;
  if (hess.is_dense) {
    MatrixXd H = hess.dense;
    H.diagonal() += hess.d;
    // Symmetric Jacobi scaling; the barrier Hessian spans many decades.
    VectorXd sc = H.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    H = sc.asDiagonal() * H * sc.asDiagonal();
    H.diagonal().array() += kReg;
    return sc.cwiseProduct(H.ldlt().solve(sc.cwiseProduct(rhs)));
  }
  const Index r = static_cast<Index>(hess.factors.size());
  MatrixXd U(nv, r);
  for (Index k = 0; k < r; ++k) U.col(k) = hess.factors[k];
  const VectorXd sc =
      (hess.d + U.rowwise().squaredNorm()).cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  U = sc.asDiagonal() * U;
  const VectorXd d = hess.d.cwiseProduct(sc).cwiseProduct(sc);  // in [0, 1]

  std::vector<Index> diag_vars, free_vars;
  for (Index i = 0; i < nv; ++i) (d(i) > 1e-6 ? diag_vars : free_vars).push_back(i);
  const Index nt = static_cast<Index>(diag_vars.size());
  const Index nf = static_cast<Index>(free_vars.size());

  VectorXd dinv(nt);
  MatrixXd Ut(nt, r), Uf(nf, r);
  for (Index i = 0; i < nt; ++i) {
    dinv(i) = 1.0 / (d(diag_vars[i]) + kReg);
    Ut.row(i) = U.row(diag_vars[i]);
  }
  for (Index i = 0; i < nf; ++i) Uf.row(i) = U.row(free_vars[i]);
  // H_tt^{-1} = D^{-1} - D^{-1} U_t C^{-1} U_t' D^{-1}, C = I + U_t' D^{-1} U_t.
  const MatrixXd DU = dinv.asDiagonal() * Ut;
  MatrixXd C = Ut.transpose() * DU;
  C.diagonal().array() += 1.0;
  const Eigen::LDLT<MatrixXd> cfac(C);
  const auto apply_inv = [&](const MatrixXd& v) -> MatrixXd {
    const MatrixXd dv = dinv.asDiagonal() * v;
    return dv - DU * cfac.solve(DU.transpose() * v);
  };
  // H_tf = U_t U_f'; Schur complement S = H_ff - H_ft H_tt^{-1} H_tf.
  const MatrixXd Htf = Ut * Uf.transpose();
  const MatrixXd W = apply_inv(Htf);
  MatrixXd S = Uf * Uf.transpose() - Htf.transpose() * W;
  for (Index i = 0; i < nf; ++i) S(i, i) += d(free_vars[i]) + kReg;
  const Eigen::LDLT<MatrixXd> sfac(S);
  const auto solve_once = [&](const VectorXd& b) {
    VectorXd bt(nt), bf(nf), x(nv);
    for (Index i = 0; i < nt; ++i) bt(i) = b(diag_vars[i]);
    for (Index i = 0; i < nf; ++i) bf(i) = b(free_vars[i]);
    const VectorXd yt = apply_inv(bt);
    VectorXd xf = VectorXd::Zero(nf);
    if (nf > 0) xf = sfac.solve(bf - Htf.transpose() * yt);
    const VectorXd xt = yt - W * xf;
    for (Index i = 0; i < nt; ++i) x(diag_vars[i]) = xt(i);
    for (Index i = 0; i < nf; ++i) x(free_vars[i]) = xf(i);
    return x;
  };
  const auto apply_H = [&](const VectorXd& v) -> VectorXd {
    return d.cwiseProduct(v) + kReg * v + U * (U.transpose() * v);
  };
  // A few steps of iterative refinement against the unfactored operator.
  const VectorXd b = sc.cwiseProduct(rhs);
  VectorXd out = solve_once(b);
  for (int pass = 0; pass < 3; ++pass) {
    const VectorXd resid = b - apply_H(out);
    if (resid.norm() <= 1e-15 * b.norm()) break;
    out += solve_once(resid);
  }
  return sc.cwiseProduct(out);
}

struct BarrierRun {
  VectorXd x;
  SolveStatus status = SolveStatus::kNumericalFailure;
  double t = 1.0;
  double dual_residual = 0.0;
  int steps = 0;
  bool stopped_early = false;
};

BarrierRun run_barrier(const ConicProblem& problem, VectorXd x,
                       const SolverOptions& options,
                       const std::function<bool(const VectorXd&)>& stop_when) {
  BarrierRun run;
  const VectorXd& c = problem.objective();
  const double m = static_cast<double>(std::max<Index>(problem.total_dimension(), 1));
  const double newton_tol = 1e-9;
  constexpr int kMaxCentering = 100;
  double t = 1.0;
  VectorXd grad;
  BarrierHessian hess;
  for (;;) {
    bool stalled = false;
    int centering_steps = 0;
    for (;;) {
      if (run.steps >= options.max_newton_steps) {
        run.x = x;
        run.t = t;
        run.status = SolveStatus::kNumericalFailure;
        return run;
      }
      barrier_derivatives(problem, x, grad, hess);
      const VectorXd g = grad - t * c;
      VectorXd dx = newton_direction(hess, -g);
      double decrement = -g.dot(dx);
      if (!hess.is_dense && !(decrement >= 0.0 && dx.allFinite())) {
        densify(hess);
        dx = newton_direction(hess, -g);
        decrement = -g.dot(dx);
      }
      run.dual_residual = g.lpNorm<Eigen::Infinity>() / t;
      if (!(decrement >= 0.0) || !dx.allFinite()) {
        stalled = true;
        break;
      }
      if (decrement / 2.0 <= newton_tol) break;

      const double phi0 = -t * c.dot(x) + *barrier_value(problem, x);
      double step = 1.0;
      bool accepted = false;
      bool within_rounding = false;
      while (step > 1e-20) {
        const VectorXd trial = x + step * dx;
        if (const auto value = barrier_value(problem, trial)) {
          const double phi = -t * c.dot(trial) + *value;
          const double slack = 1e-13 * std::abs(phi0);
          if (phi <= phi0 - 0.01 * step * decrement + slack) {
            x = trial;
            accepted = true;
            within_rounding = phi > phi0 - 0.01 * step * decrement;
            break;
          }
        }
        step *= 0.5;
      }
      ++run.steps;
      ++centering_steps;
      if (!accepted) {
        stalled = true;
        break;
      }
      // Progress only inside the rounding slack, or a centering that never
      // settles: as centred as this precision allows.
      if (within_rounding || centering_steps > kMaxCentering) break;
      if (stop_when && stop_when(x)) {
        run.x = x;
        run.t = t;
        run.status = SolveStatus::kOptimal;
        run.stopped_early = true;
        return run;
      }
      if (x.lpNorm<Eigen::Infinity>() > options.variable_bound) {
        run.x = x;
        run.t = t;
        run.status = SolveStatus::kUnbounded;
        return run;
      }
    }
    const double gap = m / t;
    const double scale = std::max(1.0, std::abs(c.dot(x)));
    if (gap <= options.gap_tol * scale) {
      run.x = x;
      run.t = t;
      run.status = SolveStatus::kOptimal;
      return run;
    }
    if (stalled) {
      // Precision floor: report the strictly feasible point reached so far.
      run.x = x;
      run.t = t;
      run.status = gap <= 1e3 * options.gap_tol * scale ? SolveStatus::kOptimal
                                                        : SolveStatus::kNumericalFailure;
      return run;
    }
    // Predictor along the central path, x'(t) = H^{-1} c, kept only if it
    // stays strictly feasible and lowers the next barrier objective.
    const double t_next = t * options.barrier_growth;
    const VectorXd tangent = newton_direction(hess, c);
    if (tangent.allFinite()) {
      const auto phi_next = [&](const VectorXd& z) -> std::optional<double> {
        const auto value = barrier_value(problem, z);
        if (!value) return std::nullopt;
        return -t_next * c.dot(z) + *value;
      };
      const double phi0 = *phi_next(x);
      for (double alpha = 1.0; alpha > 1e-3; alpha *= 0.5) {
        const VectorXd trial = x + alpha * (t_next - t) * tangent;
        const auto value = phi_next(trial);
        if (value && *value < phi0) {
          x = trial;
          break;
        }
      }
    }
    t = t_next;
  }
}

}  // namespace

std::optional<VectorXd> find_strictly_feasible(const ConicProblem& problem,
                                               const SolverOptions& options,
                                               const std::optional<VectorXd>& start) {
  const int nv = problem.num_variables();
  VectorXd x0 = start.value_or(VectorXd::Zero(nv));
  const double lowest = problem.min_eigenvalue(x0);
  if (lowest > 0.0) return x0;

  // maximize s  s.t.  F_b(x) - s I >= 0.
  ConicProblem phase_one;
  phase_one.add_variables(nv);
  const int s = phase_one.add_variable();
  phase_one.set_objective(s, 1.0);
  for (const auto& block : problem.blocks()) {
    LmiBlock lifted = block;
    lifted.add_term(s, -MatrixXd::Identity(block.size(), block.size()));
    phase_one.add_block(std::move(lifted));
  }
  VectorXd z(nv + 1);
  z.head(nv) = x0;
  z(nv) = lowest - 1.0;
  const BarrierRun run =
      run_barrier(phase_one, z, options, [nv](const VectorXd& v) { return v(nv) > 0.0; });
  if (run.stopped_early || (run.x.size() > 0 && run.x(nv) > 0.0))
    return VectorXd(run.x.head(nv));
  return std::nullopt;
}

Solution solve(const ConicProblem& problem, const SolverOptions& options,
               const std::optional<VectorXd>& start) {
  Solution solution;
  const auto feasible = find_strictly_feasible(problem, options, start);
  if (!feasible) {
    solution.report.status = SolveStatus::kInfeasible;
    return solution;
  }
  const BarrierRun run = run_barrier(problem, *feasible, options, nullptr);
  solution.x = run.x;
  SolveReport& report = solution.report;
  report.status = run.status;
  report.objective = problem.objective().dot(run.x);
  report.min_eigenvalue = problem.min_eigenvalue(run.x);
  report.primal_residual = std::max(0.0, -report.min_eigenvalue);
  report.dual_residual = run.dual_residual;
  report.gap = static_cast<double>(problem.total_dimension()) / run.t;
  report.newton_steps = run.steps;
  return solution;
}

}  // namespace rpi_forge::conic
