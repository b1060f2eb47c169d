#pragma once

#include <string_view>

#include "pnpmpc/optim/problem.hpp"

namespace pnpmpc::optim {

/// Pluggable solver backend. Implementations must be pure: identical inputs
/// yield bitwise-identical reports, and calls may run concurrently.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string_view name() const = 0;
  virtual SolveReport solve_lp(const LinearProgram& p, const ToleranceConfig& tol) const = 0;
  virtual SolveReport solve_qp(const QuadraticProgram& p, const ToleranceConfig& tol) const = 0;
};

/// Self-contained dense backend: bounded-variable two-phase primal simplex for
/// LPs, Mehrotra predictor-corrector interior point with active-set polishing
/// for QPs.
class DenseBackend final : public Backend {
 public:
  std::string_view name() const override { return "dense"; }
  SolveReport solve_lp(const LinearProgram& p, const ToleranceConfig& tol) const override;
  SolveReport solve_qp(const QuadraticProgram& p, const ToleranceConfig& tol) const override;
};

const Backend& default_backend();

/// Validates `p` (throws std::invalid_argument on contract violations) and
/// solves it with `backend`.
SolveReport solve_lp(const LinearProgram& p, const ToleranceConfig& tol = {},
                     const Backend& backend = default_backend());
SolveReport solve_qp(const QuadraticProgram& p, const ToleranceConfig& tol = {},
                     const Backend& backend = default_backend());

// Backend building blocks, exposed for tests.
SolveReport simplex_solve(const LinearProgram& p, const ToleranceConfig& tol);
SolveReport interior_point_solve(const QuadraticProgram& p, const ToleranceConfig& tol);

}  // namespace pnpmpc::optim
