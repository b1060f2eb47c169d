#pragma once

#include <string>
#include <string_view>

#include <Eigen/Core>

namespace pnpmpc::optim {

/// Solver tolerances. Defaults follow double-precision practice; every field
/// may be overridden per call.
struct ToleranceConfig {
  double feas_tol = 1e-8;
  double opt_tol_lp = 1e-8;
  double opt_tol_qp = 1e-6;
  /// Strict inequalities `a < b` are closed as `a <= b - strict_margin`.
  double strict_margin = 1e-9;
  /// Iteration cap is `iteration_factor * (variables + constraints)`.
  int iteration_factor = 50;
};

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kNumericalFailure };

std::string_view to_string(SolveStatus status);

/// min c'x  s.t.  A_ineq x <= b_ineq,  A_eq x = b_eq,  lower <= x <= upper.
///
/// Empty `lower` / `upper` vectors mean the variables are unbounded on that
/// side; individual entries may be +-infinity.
struct LinearProgram {
  Eigen::VectorXd objective;
  Eigen::MatrixXd a_ineq;
  Eigen::VectorXd b_ineq;
  Eigen::MatrixXd a_eq;
  Eigen::VectorXd b_eq;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  /// Builds an empty problem with `n` free variables and zero objective.
  static LinearProgram with_variables(int n);

  int num_variables() const { return static_cast<int>(objective.size()); }
  double lower_bound(int j) const;
  double upper_bound(int j) const;

  /// Throws std::invalid_argument when shapes disagree or data is not finite.
  void validate() const;
};

/// min 1/2 x'Hx + c'x subject to the same constraint blocks as LinearProgram.
struct QuadraticProgram {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear;
  Eigen::MatrixXd a_ineq;
  Eigen::VectorXd b_ineq;
  Eigen::MatrixXd a_eq;
  Eigen::VectorXd b_eq;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int num_variables() const { return static_cast<int>(linear.size()); }
  double lower_bound(int j) const;
  double upper_bound(int j) const;

  /// Throws std::invalid_argument on shape errors, non-finite data, an
  /// asymmetric Hessian (1e-10) or a Hessian eigenvalue below -1e-8.
  void validate() const;
};

struct SolveReport {
  SolveStatus status = SolveStatus::kNumericalFailure;
  Eigen::VectorXd x;
  double objective = 0.0;
  /// Max violation of equality, inequality and bound constraints at `x`.
  double primal_residual = 0.0;
  /// Stationarity residual of the KKT system (QP) or dual infeasibility (LP).
  double dual_residual = 0.0;
  int iterations = 0;
  /// Multipliers with the sign convention  c + H x + A_eq' y_eq + A_ineq' y_ineq
  /// - reduced_costs = 0  and  y_ineq >= 0.  `reduced_costs` carries the bound
  /// multipliers (positive at an active lower bound, negative at an upper).
  Eigen::VectorXd dual_eq;
  Eigen::VectorXd dual_ineq;
  Eigen::VectorXd reduced_costs;
  std::string message;

  bool optimal() const { return status == SolveStatus::kOptimal; }
};

/// Max constraint violation of `x` for the given blocks.
double primal_violation(const Eigen::MatrixXd& a_ineq, const Eigen::VectorXd& b_ineq,
                        const Eigen::MatrixXd& a_eq, const Eigen::VectorXd& b_eq,
                        const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                        const Eigen::VectorXd& x);

}  // namespace pnpmpc::optim
