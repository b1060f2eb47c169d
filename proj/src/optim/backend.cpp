#include "pnpmpc/optim/solvers.hpp"

namespace pnpmpc::optim {

SolveReport DenseBackend::solve_lp(const LinearProgram& p, const ToleranceConfig& tol) const {
  return simplex_solve(p, tol);
}

SolveReport DenseBackend::solve_qp(const QuadraticProgram& p, const ToleranceConfig& tol) const {
  return interior_point_solve(p, tol);
}

const Backend& default_backend() {
  static const DenseBackend backend;
  return backend;
}

SolveReport solve_lp(const LinearProgram& p, const ToleranceConfig& tol, const Backend& backend) {
  p.validate();
  return backend.solve_lp(p, tol);
}

SolveReport solve_qp(const QuadraticProgram& p, const ToleranceConfig& tol, const Backend& backend) {
  p.validate();
  return backend.solve_qp(p, tol);
}

}  // namespace pnpmpc::optim
