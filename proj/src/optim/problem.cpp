#include "pnpmpc/optim/problem.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace pnpmpc::optim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_block(const char* name, const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int n) {
  if (a.rows() != b.size()) {
    throw std::invalid_argument(std::string(name) + ": row count does not match rhs length");
  }
  if (a.rows() > 0 && a.cols() != n) {
    throw std::invalid_argument(std::string(name) + ": column count does not match variables");
  }
  if (!a.allFinite() || !b.allFinite()) {
    throw std::invalid_argument(std::string(name) + ": non-finite entry");
  }
}

void check_bounds(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, int n) {
  if (lower.size() != 0 && lower.size() != n) {
    throw std::invalid_argument("lower bounds: length does not match variables");
  }
  if (upper.size() != 0 && upper.size() != n) {
    throw std::invalid_argument("upper bounds: length does not match variables");
  }
  for (int j = 0; j < lower.size(); ++j) {
    if (std::isnan(lower[j]) || lower[j] == kInf) throw std::invalid_argument("lower bounds: invalid entry");
  }
  for (int j = 0; j < upper.size(); ++j) {
    if (std::isnan(upper[j]) || upper[j] == -kInf) throw std::invalid_argument("upper bounds: invalid entry");
  }
}

}  // namespace

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kNumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

LinearProgram LinearProgram::with_variables(int n) {
  LinearProgram p;
  p.objective = Eigen::VectorXd::Zero(n);
  p.a_ineq.resize(0, n);
  p.a_eq.resize(0, n);
  return p;
}

double LinearProgram::lower_bound(int j) const { return lower.size() ? lower[j] : -kInf; }
double LinearProgram::upper_bound(int j) const { return upper.size() ? upper[j] : kInf; }

void LinearProgram::validate() const {
  const int n = num_variables();
  if (!objective.allFinite()) throw std::invalid_argument("objective: non-finite entry");
  check_block("inequality block", a_ineq, b_ineq, n);
  check_block("equality block", a_eq, b_eq, n);
  check_bounds(lower, upper, n);
}

double QuadraticProgram::lower_bound(int j) const { return lower.size() ? lower[j] : -kInf; }
double QuadraticProgram::upper_bound(int j) const { return upper.size() ? upper[j] : kInf; }

void QuadraticProgram::validate() const {
  const int n = num_variables();
  if (hessian.rows() != n || hessian.cols() != n) {
    throw std::invalid_argument("hessian: shape does not match variables");
  }
  if (!hessian.allFinite() || !linear.allFinite()) {
    throw std::invalid_argument("objective: non-finite entry");
  }
  if (n > 0 && (hessian - hessian.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw std::invalid_argument("hessian: not symmetric");
  }
  if (n > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-8) {
      throw std::invalid_argument("hessian: not positive semidefinite");
    }
  }
  check_block("inequality block", a_ineq, b_ineq, n);
  check_block("equality block", a_eq, b_eq, n);
  check_bounds(lower, upper, n);
}

double primal_violation(const Eigen::MatrixXd& a_ineq, const Eigen::VectorXd& b_ineq,
                        const Eigen::MatrixXd& a_eq, const Eigen::VectorXd& b_eq,
                        const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                        const Eigen::VectorXd& x) {
  double worst = 0.0;
  if (a_ineq.rows() > 0) {
    worst = std::max(worst, (a_ineq * x - b_ineq).maxCoeff());
  }
  if (a_eq.rows() > 0) {
    worst = std::max(worst, (a_eq * x - b_eq).cwiseAbs().maxCoeff());
  }
  for (int j = 0; j < lower.size(); ++j) worst = std::max(worst, lower[j] - x[j]);
  for (int j = 0; j < upper.size(); ++j) worst = std::max(worst, x[j] - upper[j]);
  return worst;
}

}  // namespace pnpmpc::optim
