#include "rpi_forge/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace rpi_forge::lp {

const char* to_string(Status status) {
  switch (status) {
    case Status::kOptimal: return "optimal";
    case Status::kInfeasible: return "infeasible";
    case Status::kUnbounded: return "unbounded";
    case Status::kIterationLimit: return "iteration-limit";
  }
  return "unknown";
}

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense revised simplex on  min c'y, Ay = b, y >= 0  with b >= 0. Columns
// [0, n) are structural, [n, n + m) the phase-one artificials. The basis is
// refactored from scratch every pivot; bases here have at most a few dozen
// rows, so pricing dominates and no update formulas are needed.
class RevisedSimplex {
 public:
  RevisedSimplex(const MatrixXd& A, const VectorXd& b, const Options& options)
      : A_(A), b_(b), options_(options), m_(A.rows()), n_(A.cols()) {
    basis_.resize(m_);
    is_basic_.assign(n_ + m_, false);
    for (Index i = 0; i < m_; ++i) {
      basis_[i] = n_ + i;
      is_basic_[n_ + i] = true;
    }
  }

  // Runs pivots until optimal, unbounded, or out of iterations.
  Status run(const VectorXd& cost, bool phase_two) {
    int degenerate_streak = 0;
    bool bland = false;  // sticky once stalling is detected
    const int bland_after = static_cast<int>(2 * m_ + 10);
    while (iterations_ < options_.max_iterations) {
      refactor();
      VectorXd cost_basic(m_);
      for (Index i = 0; i < m_; ++i) cost_basic(i) = cost(basis_[i]);
      const VectorXd pi = lu_.transpose().solve(cost_basic);
      const VectorXd reduced = cost.head(n_) - A_.transpose() * pi;

      bland = bland || degenerate_streak > bland_after;
      Index entering = -1;
      double most_negative = -options_.optimality_tol;
      for (Index j = 0; j < n_; ++j) {
        if (is_basic_[j]) continue;
        if (reduced(j) < most_negative) {
          entering = j;
          if (bland) break;
          most_negative = reduced(j);
        }
      }
      if (entering < 0) return Status::kOptimal;

      const VectorXd w = lu_.solve(A_.col(entering));
      Index leaving = -1;
      double best_ratio = kInf;
      double best_pivot = 0.0;
      for (Index i = 0; i < m_; ++i) {
        double ratio;
        const double wi = w(i);
        if (phase_two && basis_[i] >= n_) {
          // Artificial stuck at zero on a redundant row: force it out first.
          if (std::abs(wi) <= options_.pivot_tol) continue;
          ratio = 0.0;
        } else {
          if (wi <= options_.pivot_tol) continue;
          ratio = std::max(x_basic_(i), 0.0) / wi;
        }
        bool take = false;
        const double slack = leaving < 0 ? 0.0 : 1e-12 * (1.0 + best_ratio);
        if (leaving < 0 || ratio < best_ratio - slack) {
          take = true;
        } else if (ratio <= best_ratio + slack) {
          take = bland ? basis_[i] < basis_[leaving]
                       : std::abs(wi) > std::abs(best_pivot);
        }
        if (take) {
          leaving = i;
          best_ratio = std::min(ratio, best_ratio);
          best_pivot = wi;
        }
      }
      if (leaving < 0) return Status::kUnbounded;

      // Progress below round-off counts as a degenerate pivot.
      const double objective = cost_basic.dot(x_basic_);
      const double gain = best_ratio * std::abs(reduced(entering));
      degenerate_streak = gain <= 1e-12 * (1.0 + std::abs(objective)) ? degenerate_streak + 1 : 0;
      is_basic_[basis_[leaving]] = false;
      basis_[leaving] = entering;
      is_basic_[entering] = true;
      ++iterations_;
    }
    return Status::kIterationLimit;
  }

  double artificial_mass() {
    refactor();
    double total = 0.0;
    for (Index i = 0; i < m_; ++i)
      if (basis_[i] >= n_) total += std::max(x_basic_(i), 0.0);
    return total;
  }

  // After phase one: swap zero-level artificials for structural columns where
  // the row allows it. Rows where it does not are linearly dependent.
  void drive_out_artificials() {
    for (Index i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      refactor();
      const VectorXd row = lu_.transpose().solve(VectorXd::Unit(m_, i));
      const VectorXd alpha = A_.transpose() * row;
      Index best = -1;
      double best_abs = 1e-9;
      for (Index j = 0; j < n_; ++j) {
        if (is_basic_[j]) continue;
        const double scale = 1.0 + A_.col(j).cwiseAbs().maxCoeff();
        if (std::abs(alpha(j)) / scale > best_abs) {
          best_abs = std::abs(alpha(j)) / scale;
          best = j;
        }
      }
      if (best < 0) continue;
      is_basic_[basis_[i]] = false;
      basis_[i] = best;
      is_basic_[best] = true;
    }
  }

  VectorXd structural_solution() {
    refactor();
    VectorXd y = VectorXd::Zero(n_);
    for (Index i = 0; i < m_; ++i)
      if (basis_[i] < n_) y(basis_[i]) = std::max(x_basic_(i), 0.0);
    return y;
  }

  VectorXd multipliers(const VectorXd& cost) {
    refactor();
    VectorXd cost_basic(m_);
    for (Index i = 0; i < m_; ++i) cost_basic(i) = cost(basis_[i]);
    return lu_.transpose().solve(cost_basic);
  }

  int iterations() const { return iterations_; }

 private:
  void refactor() {
    MatrixXd B(m_, m_);
    for (Index i = 0; i < m_; ++i) {
      const Index j = basis_[i];
      if (j < n_) {
        B.col(i) = A_.col(j);
      } else {
        B.col(i) = VectorXd::Unit(m_, j - n_);
      }
    }
    lu_.compute(B);
    x_basic_ = lu_.solve(b_);
  }

  const MatrixXd& A_;
  const VectorXd& b_;
  Options options_;
  Index m_;
  Index n_;
  std::vector<Index> basis_;
  std::vector<bool> is_basic_;
  Eigen::PartialPivLU<MatrixXd> lu_;
  VectorXd x_basic_;
  int iterations_ = 0;
};

Result maximize_impl(const MatrixXd& G, const VectorXd& h, const VectorXd& c,
                     const Options& options, bool probe_feasibility);

}  // namespace

Result solve_standard_form(const MatrixXd& A_in, const VectorXd& b_in,
                           const VectorXd& c, const Options& options) {
  const Index m = A_in.rows();
  const Index n = A_in.cols();
  MatrixXd A = A_in;
  VectorXd b = b_in;
  VectorXd sign = VectorXd::Ones(m);
  for (Index i = 0; i < m; ++i) {
    if (b(i) < 0) {
      A.row(i) *= -1.0;
      b(i) = -b(i);
      sign(i) = -1.0;
    }
  }

  Result result;
  RevisedSimplex simplex(A, b, options);

  VectorXd phase_one_cost = VectorXd::Zero(n + m);
  phase_one_cost.tail(m).setOnes();
  Status status = simplex.run(phase_one_cost, /*phase_two=*/false);
  result.iterations = simplex.iterations();
  if (status == Status::kIterationLimit) {
    result.status = status;
    return result;
  }
  const double scale = std::max(1.0, b.lpNorm<Eigen::Infinity>());
  if (simplex.artificial_mass() > options.feasibility_tol * scale) {
    result.status = Status::kInfeasible;
    return result;
  }
  simplex.drive_out_artificials();

  VectorXd phase_two_cost = VectorXd::Zero(n + m);
  phase_two_cost.head(n) = c;
  status = simplex.run(phase_two_cost, /*phase_two=*/true);
  result.iterations = simplex.iterations();
  result.status = status;
  if (status != Status::kOptimal) return result;

  result.x = simplex.structural_solution();
  result.duals = simplex.multipliers(phase_two_cost).cwiseProduct(sign);
  result.objective = c.dot(result.x);
  return result;
}

namespace {

Result maximize_impl(const MatrixXd& G, const VectorXd& h, const VectorXd& c,
                     const Options& options, bool probe_feasibility) {
  const Index d = G.cols();
  Result result;

  // Row-normalize so tolerances are geometric distances.
  std::vector<Index> keep;
  keep.reserve(G.rows());
  VectorXd norms(G.rows());
  for (Index i = 0; i < G.rows(); ++i) {
    norms(i) = G.row(i).norm();
    if (norms(i) < 1e-14) {
      if (h(i) < -options.feasibility_tol) {
        result.status = Status::kInfeasible;
        return result;
      }
      continue;
    }
    keep.push_back(i);
  }
  const Index q = static_cast<Index>(keep.size());
  if (q == 0) {
    if (c.norm() <= options.optimality_tol) {
      result.status = Status::kOptimal;
      result.x = VectorXd::Zero(d);
      return result;
    }
    result.status = Status::kUnbounded;
    return result;
  }
  MatrixXd dual_A(d, q);
  VectorXd dual_cost(q);
  for (Index k = 0; k < q; ++k) {
    dual_A.col(k) = G.row(keep[k]).transpose() / norms(keep[k]);
    dual_cost(k) = h(keep[k]) / norms(keep[k]);
  }

  const Result dual = solve_standard_form(dual_A, c, dual_cost, options);
  result.iterations = dual.iterations;
  switch (dual.status) {
    case Status::kOptimal:
      result.status = Status::kOptimal;
      result.x = dual.duals;
      result.objective = c.dot(result.x);
      return result;
    case Status::kUnbounded:
      result.status = Status::kInfeasible;
      return result;
    case Status::kIterationLimit:
      result.status = Status::kIterationLimit;
      return result;
    case Status::kInfeasible:
      break;
  }
  // Dual infeasible: primal is unbounded if it has any feasible point.
  if (!probe_feasibility) {
    result.status = Status::kUnbounded;
    return result;
  }
  result.status = find_feasible_point(G, h, options) ? Status::kUnbounded
                                                     : Status::kInfeasible;
  return result;
}

}  // namespace

Result maximize(const MatrixXd& G, const VectorXd& h, const VectorXd& c,
                const Options& options) {
  return maximize_impl(G, h, c, options, /*probe_feasibility=*/true);
}

std::optional<VectorXd> find_feasible_point(const MatrixXd& G, const VectorXd& h,
                                            const Options& options) {
  const Index d = G.cols();
  const Index q = G.rows();
  if (q == 0) return VectorXd::Zero(d);
  // max -s  s.t.  G_i x / |G_i| - s <= h_i / |G_i|,  -s <= 1.
  MatrixXd aux_G = MatrixXd::Zero(q + 1, d + 1);
  VectorXd aux_h(q + 1);
  for (Index i = 0; i < q; ++i) {
    const double norm = G.row(i).norm();
    if (norm < 1e-14) {
      if (h(i) < -options.feasibility_tol) return std::nullopt;
      aux_h(i) = 1.0;  // vacuous row
      continue;
    }
    aux_G.row(i).head(d) = G.row(i) / norm;
    aux_G(i, d) = -1.0;
    aux_h(i) = h(i) / norm;
  }
  aux_G(q, d) = -1.0;
  aux_h(q) = 1.0;
  VectorXd aux_c = VectorXd::Zero(d + 1);
  aux_c(d) = -1.0;
  const Result r = maximize_impl(aux_G, aux_h, aux_c, options, false);
  if (!r.optimal()) return std::nullopt;
  if (-r.objective > options.feasibility_tol) return std::nullopt;
  return VectorXd(r.x.head(d));
}

std::optional<ChebyshevBall> chebyshev_ball(const MatrixXd& G, const VectorXd& h,
                                            double radius_cap,
                                            const Options& options) {
  const Index d = G.cols();
  const Index q = G.rows();
  MatrixXd aux_G = MatrixXd::Zero(q + 1, d + 1);
  VectorXd aux_h(q + 1);
  for (Index i = 0; i < q; ++i) {
    aux_G.row(i).head(d) = G.row(i);
    aux_G(i, d) = G.row(i).norm();
    aux_h(i) = h(i);
  }
  aux_G(q, d) = 1.0;
  aux_h(q) = radius_cap;
  VectorXd aux_c = VectorXd::Zero(d + 1);
  aux_c(d) = 1.0;
  const Result r = maximize_impl(aux_G, aux_h, aux_c, options, false);
  if (!r.optimal() || r.x(d) < -options.feasibility_tol) return std::nullopt;
  return ChebyshevBall{r.x.head(d), std::max(r.x(d), 0.0)};
}

}  // namespace rpi_forge::lp
