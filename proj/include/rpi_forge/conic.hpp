#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

/// Conic programming over products of PSD cones (1x1 blocks are the
/// nonnegative orthant), in LMI form:
///
///   maximize  c'x   s.t.   F_b(x) = F_b0 + sum_k x_k F_bk  >= 0  for every b.
///
/// LP rows and SDP blocks share one interface so synthesis code never cares
/// which cone a constraint lives in. Solved by a primal log-det barrier
/// method with an automatic phase one; iterates are strictly feasible, so a
/// returned point always satisfies every block with a positive definite
/// margin.
namespace rpi_forge::conic {

struct LmiBlock {
  Eigen::MatrixXd constant;
  std::vector<int> variables;
  std::vector<Eigen::MatrixXd> coefficients;

  explicit LmiBlock(Eigen::MatrixXd constant_term)
      : constant(std::move(constant_term)) {}

  Eigen::Index size() const { return constant.rows(); }

  /// Adds `coefficient` to the term of `variable`, merging repeats.
  void add_term(int variable, const Eigen::MatrixXd& coefficient);
};

class ConicProblem {
 public:
  /// Returns the index of the first of `count` new variables.
  int add_variables(int count);
  int add_variable() { return add_variables(1); }

  /// Objective is maximized.
  void set_objective(int variable, double coefficient);
  void add_block(LmiBlock block);
  /// a'x + b >= 0 as a 1x1 block.
  void add_linear(const std::vector<std::pair<int, double>>& terms, double b);

  int num_variables() const { return num_variables_; }
  const Eigen::VectorXd& objective() const { return objective_; }
  const std::vector<LmiBlock>& blocks() const { return blocks_; }
  Eigen::Index total_dimension() const;

  Eigen::MatrixXd evaluate(std::size_t block, const Eigen::VectorXd& x) const;
  /// Smallest eigenvalue over all blocks at x.
  double min_eigenvalue(const Eigen::VectorXd& x) const;

 private:
  int num_variables_ = 0;
  Eigen::VectorXd objective_;
  std::vector<LmiBlock> blocks_;
};

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kNumericalFailure };

const char* to_string(SolveStatus status);

struct SolverOptions {
  double feasibility_tol = 1e-8;
  double gap_tol = 1e-8;
  double barrier_growth = 4.0;
  int max_newton_steps = 3000;
  double variable_bound = 1e9;
};

struct SolveReport {
  SolveStatus status = SolveStatus::kNumericalFailure;
  double objective = 0.0;
  double primal_residual = 0.0;  // max(0, -min eigenvalue)
  double dual_residual = 0.0;    // |c + sum tr(F_k Z)|_inf at the central point
  double gap = 0.0;              // sum_b <F_b(x), Z_b>
  double min_eigenvalue = 0.0;
  int newton_steps = 0;
};

struct Solution {
  Eigen::VectorXd x;
  SolveReport report;
};

Solution solve(const ConicProblem& problem, const SolverOptions& options = {},
               const std::optional<Eigen::VectorXd>& start = std::nullopt);

/// Phase one only: a point with every block positive definite, if any.
std::optional<Eigen::VectorXd> find_strictly_feasible(
    const ConicProblem& problem, const SolverOptions& options = {},
    const std::optional<Eigen::VectorXd>& start = std::nullopt);

}  // namespace rpi_forge::conic
