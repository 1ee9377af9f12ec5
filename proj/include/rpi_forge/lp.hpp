#pragma once

#include <optional>

#include <Eigen/Dense>

/// Dense linear programming.
///
/// The workhorse is a two-phase revised simplex for standard-form problems
/// (min c'y, Ay = b, y >= 0). Inequality-form problems max c'x, Gx <= h with
/// free x, which is how every polytope query in this library is phrased, are
/// solved through their standard-form dual: the basis then has only dim(x)
/// rows, so LPs with thousands of halfspaces in a handful of variables stay
/// cheap. The primal optimizer is read off the simplex multipliers.
namespace rpi_forge::lp {

enum class Status { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

const char* to_string(Status status);

struct Options {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-11;
  int max_iterations = 200000;
};

struct Result {
  Status status = Status::kIterationLimit;
  Eigen::VectorXd x;       // primal solution
  Eigen::VectorXd duals;   // standard form only: simplex multipliers
  double objective = 0.0;
  int iterations = 0;

  bool optimal() const { return status == Status::kOptimal; }
};

/// min c'y  s.t.  A y = b,  y >= 0.
Result solve_standard_form(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& c, const Options& options = {});

/// max c'x  s.t.  G x <= h  (x free).
Result maximize(const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                const Eigen::VectorXd& c, const Options& options = {});

/// Returns a point with G x <= h + tol, or nothing when the system is
/// infeasible by more than `options.feasibility_tol`.
std::optional<Eigen::VectorXd> find_feasible_point(const Eigen::MatrixXd& G,
                                                   const Eigen::VectorXd& h,
                                                   const Options& options = {});

struct ChebyshevBall {
  Eigen::VectorXd center;
  double radius = 0.0;
};

/// Largest Euclidean ball inside {x : G x <= h}; the radius is capped at
/// `radius_cap` so unbounded sets still return a deep interior point.
/// Nothing is returned for an empty set.
std::optional<ChebyshevBall> chebyshev_ball(const Eigen::MatrixXd& G,
                                            const Eigen::VectorXd& h,
                                            double radius_cap = 1e6,
                                            const Options& options = {});

}  // namespace rpi_forge::lp
