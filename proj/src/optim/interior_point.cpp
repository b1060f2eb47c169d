// Convex QP via an infeasible-start Mehrotra predictor-corrector interior
// point method on the reduced KKT system, followed by an active-set polish.
// Infeasibility is decided beforehand by a phase-1 simplex on the constraint
// set, which gives an exact verdict rather than a divergence heuristic.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/LU>

#include "pnpmpc/optim/solvers.hpp"

namespace pnpmpc::optim {
namespace {

constexpr double kReg = 1e-10;
constexpr int kMaxIterations = 200;
constexpr double kStepFraction = 0.995;

// Standardized problem: min 1/2 x'Hx + c'x, A x = b, G x <= h.
struct Standard {
  Eigen::MatrixXd h_mat;
  Eigen::VectorXd c;
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::MatrixXd g;
  Eigen::VectorXd h;
  // Provenance of each row for mapping multipliers back.
  enum class Origin { kRow, kLower, kUpper, kFixed };
  std::vector<std::pair<Origin, int>> eq_origin;
  std::vector<std::pair<Origin, int>> ineq_origin;
};

Standard standardize(const QuadraticProgram& p) {
  const int n = p.num_variables();
  std::vector<Eigen::RowVectorXd> eq_rows, in_rows;
  std::vector<double> eq_rhs, in_rhs;
  Standard s;
  for (int i = 0; i < p.a_eq.rows(); ++i) {
    eq_rows.push_back(p.a_eq.row(i));
    eq_rhs.push_back(p.b_eq[i]);
    s.eq_origin.emplace_back(Standard::Origin::kRow, i);
  }
  for (int i = 0; i < p.a_ineq.rows(); ++i) {
    in_rows.push_back(p.a_ineq.row(i));
    in_rhs.push_back(p.b_ineq[i]);
    s.ineq_origin.emplace_back(Standard::Origin::kRow, i);
  }
  for (int j = 0; j < n; ++j) {
    const double lo = p.lower_bound(j), up = p.upper_bound(j);
    Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(n);
    if (lo == up) {
      e[j] = 1.0;
      eq_rows.push_back(e);
      eq_rhs.push_back(lo);
      s.eq_origin.emplace_back(Standard::Origin::kFixed, j);
      continue;
    }
    if (std::isfinite(lo)) {
      e[j] = -1.0;
      in_rows.push_back(e);
      in_rhs.push_back(-lo);
      s.ineq_origin.emplace_back(Standard::Origin::kLower, j);
    }
    if (std::isfinite(up)) {
      e.setZero();
      e[j] = 1.0;
      in_rows.push_back(e);
      in_rhs.push_back(up);
      s.ineq_origin.emplace_back(Standard::Origin::kUpper, j);
    }
  }
  s.h_mat = p.hessian;
  s.c = p.linear;
  s.a.resize(static_cast<int>(eq_rows.size()), n);
  s.b.resize(static_cast<int>(eq_rows.size()));
  for (int i = 0; i < s.a.rows(); ++i) {
    s.a.row(i) = eq_rows[i];
    s.b[i] = eq_rhs[i];
  }
  s.g.resize(static_cast<int>(in_rows.size()), n);
  s.h.resize(static_cast<int>(in_rows.size()));
  for (int i = 0; i < s.g.rows(); ++i) {
    s.g.row(i) = in_rows[i];
    s.h[i] = in_rhs[i];
  }
  return s;
}

double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = 1.0;
  for (int i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  }
  return alpha;
}

// Solves the regularized saddle system, refining against the unregularized one.
Eigen::VectorXd saddle_solve(const Eigen::MatrixXd& k_exact, const Eigen::PartialPivLU<Eigen::MatrixXd>& lu,
                             const Eigen::VectorXd& rhs) {
  Eigen::VectorXd sol = lu.solve(rhs);
  for (int it = 0; it < 3; ++it) {
    const Eigen::VectorXd r = rhs - k_exact * sol;
    sol += lu.solve(r);
  }
  return sol;
}

struct IpmResult {
  bool converged = false;
  bool diverged = false;
  Eigen::VectorXd x, y, z, s;
  int iterations = 0;
};

IpmResult mehrotra(const Standard& q, double tol) {
  const int n = static_cast<int>(q.c.size());
  const int me = static_cast<int>(q.a.rows());
  const int mi = static_cast<int>(q.g.rows());
  IpmResult out;

  Eigen::MatrixXd k_exact = Eigen::MatrixXd::Zero(n + me, n + me);
  if (me > 0) {
    k_exact.block(n, 0, me, n) = q.a;
    k_exact.block(0, n, n, me) = q.a.transpose();
  }
  Eigen::MatrixXd reg = Eigen::MatrixXd::Zero(n + me, n + me);
  reg.diagonal().head(n).setConstant(kReg);
  reg.diagonal().tail(me).setConstant(-kReg);

  // Starting point: least-squares style solve with unit weights on G.
  Eigen::VectorXd x(n), y = Eigen::VectorXd::Zero(me), z = Eigen::VectorXd::Ones(mi), s(mi);
  {
    Eigen::MatrixXd k = k_exact;
    k.topLeftCorner(n, n) = q.h_mat;
    if (mi > 0) k.topLeftCorner(n, n) += q.g.transpose() * q.g;
    const Eigen::MatrixXd k_reg = k + reg;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(k_reg);
    Eigen::VectorXd rhs(n + me);
    rhs.head(n) = -q.c;
    if (mi > 0) rhs.head(n) += q.g.transpose() * q.h;
    rhs.tail(me) = q.b;
    const Eigen::VectorXd sol = saddle_solve(k, lu, rhs);
    x = sol.head(n);
    if (!x.allFinite()) x.setZero();
    if (mi > 0) {
      s = q.h - q.g * x;
      for (int i = 0; i < mi; ++i) s[i] = std::max(s[i], 1.0);
    }
  }

  const double scale_p = 1.0 + std::max(q.b.size() ? q.b.cwiseAbs().maxCoeff() : 0.0,
                                        q.h.size() ? q.h.cwiseAbs().maxCoeff() : 0.0);
  const double scale_d = 1.0 + (q.c.size() ? q.c.cwiseAbs().maxCoeff() : 0.0);

  for (int iter = 0; iter < kMaxIterations; ++iter) {
    out.iterations = iter;
    Eigen::VectorXd r_d = q.h_mat * x + q.c;
    if (me > 0) r_d += q.a.transpose() * y;
    if (mi > 0) r_d += q.g.transpose() * z;
    const Eigen::VectorXd r_p = me > 0 ? Eigen::VectorXd(q.a * x - q.b) : Eigen::VectorXd();
    const Eigen::VectorXd r_i = mi > 0 ? Eigen::VectorXd(q.g * x + s - q.h) : Eigen::VectorXd();
    const double mu = mi > 0 ? s.dot(z) / mi : 0.0;

    const double res_p = std::max(me ? r_p.cwiseAbs().maxCoeff() : 0.0, mi ? r_i.cwiseAbs().maxCoeff() : 0.0);
    const double res_d = n ? r_d.cwiseAbs().maxCoeff() : 0.0;
    if (res_p <= tol * scale_p && res_d <= tol * scale_d && mu <= tol * scale_d) {
      out.converged = true;
      break;
    }
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 1e12) {
      out.diverged = true;
      break;
    }

    Eigen::MatrixXd k = k_exact;
    k.topLeftCorner(n, n) = q.h_mat;
    Eigen::VectorXd w(mi);
    if (mi > 0) {
      w = z.cwiseQuotient(s);
      k.topLeftCorner(n, n) += q.g.transpose() * w.asDiagonal() * q.g;
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(k + reg);

    auto direction = [&](const Eigen::VectorXd& rc, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                         Eigen::VectorXd& dz, Eigen::VectorXd& ds) {
      Eigen::VectorXd rhs(n + me);
      rhs.head(n) = -r_d;
      if (mi > 0) {
        const Eigen::VectorXd t = (rc + z.cwiseProduct(r_i)).cwiseQuotient(s);
        rhs.head(n) -= q.g.transpose() * t;
      }
      if (me > 0) rhs.tail(me) = -r_p;
      const Eigen::VectorXd sol = saddle_solve(k, lu, rhs);
      dx = sol.head(n);
      dy = sol.tail(me);
      if (mi > 0) {
        ds = -r_i - q.g * dx;
        dz = (rc - z.cwiseProduct(ds)).cwiseQuotient(s);
      } else {
        ds.resize(0);
        dz.resize(0);
      }
    };

    Eigen::VectorXd dx, dy, dz, ds;
    const Eigen::VectorXd rc_aff = -s.cwiseProduct(z);
    direction(rc_aff, dx, dy, dz, ds);
    if (mi > 0) {
      const double a_aff = std::min(max_step(s, ds), max_step(z, dz));
      const double mu_aff = (s + a_aff * ds).dot(z + a_aff * dz) / mi;
      const double sigma = std::pow(std::max(0.0, mu_aff) / std::max(mu, 1e-300), 3.0);
      const Eigen::VectorXd rc =
          -s.cwiseProduct(z) - ds.cwiseProduct(dz) + Eigen::VectorXd::Constant(mi, std::min(sigma, 1.0) * mu);
      direction(rc, dx, dy, dz, ds);
    }
    double alpha = 1.0;
    if (mi > 0) alpha = std::min(1.0, kStepFraction * std::min(max_step(s, ds), max_step(z, dz)));
    x += alpha * dx;
    if (me > 0) y += alpha * dy;
    if (mi > 0) {
      s += alpha * ds;
      z += alpha * dz;
      for (int i = 0; i < mi; ++i) {
        s[i] = std::max(s[i], 1e-300);
        z[i] = std::max(z[i], 1e-300);
      }
    }
  }
  out.x = x;
  out.y = y;
  out.z = z;
  out.s = s;
  return out;
}

// Equality-constrained solve on the guessed active set.
bool polish(const Standard& q, const IpmResult& ipm, double feas_tol, Eigen::VectorXd& x, Eigen::VectorXd& y,
            Eigen::VectorXd& z) {
  const int n = static_cast<int>(q.c.size());
  const int me = static_cast<int>(q.a.rows());
  const int mi = static_cast<int>(q.g.rows());
  std::vector<int> active;
  for (int i = 0; i < mi; ++i) {
    if (ipm.z[i] > ipm.s[i]) active.push_back(i);
  }
  const int na = static_cast<int>(active.size());
  const int dim = n + me + na;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(dim, dim);
  k.topLeftCorner(n, n) = q.h_mat;
  Eigen::VectorXd rhs(dim);
  rhs.head(n) = -q.c;
  if (me > 0) {
    k.block(n, 0, me, n) = q.a;
    k.block(0, n, n, me) = q.a.transpose();
    rhs.segment(n, me) = q.b;
  }
  for (int r = 0; r < na; ++r) {
    k.block(n + me + r, 0, 1, n) = q.g.row(active[r]);
    k.block(0, n + me + r, n, 1) = q.g.row(active[r]).transpose();
    rhs[n + me + r] = q.h[active[r]];
  }
  Eigen::MatrixXd k_reg = k;
  k_reg.diagonal().head(n).array() += 1e-9;
  k_reg.diagonal().tail(me + na).array() -= 1e-9;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(k_reg);
  Eigen::VectorXd sol = lu.solve(rhs);
  for (int it = 0; it < 8; ++it) sol += lu.solve(rhs - k * sol);
  if (!sol.allFinite()) return false;

  Eigen::VectorXd px = sol.head(n);
  if (mi > 0 && (q.g * px - q.h).maxCoeff() > feas_tol) return false;
  if (me > 0 && (q.a * px - q.b).cwiseAbs().maxCoeff() > feas_tol) return false;
  Eigen::VectorXd pz = Eigen::VectorXd::Zero(mi);
  for (int r = 0; r < na; ++r) {
    const double v = sol[n + me + r];
    if (v < -1e-9) return false;
    pz[active[r]] = std::max(0.0, v);
  }
  const double obj_ipm = 0.5 * ipm.x.dot(q.h_mat * ipm.x) + q.c.dot(ipm.x);
  const double obj_pol = 0.5 * px.dot(q.h_mat * px) + q.c.dot(px);
  if (obj_pol > obj_ipm + 1e-9 * (1.0 + std::abs(obj_ipm))) return false;
  x = px;
  y = sol.segment(n, me);
  z = pz;
  return true;
}

}  // namespace

SolveReport interior_point_solve(const QuadraticProgram& p, const ToleranceConfig& tol) {
  SolveReport report;
  const int n = p.num_variables();

  // Exact feasibility verdict first.
  LinearProgram feas;
  feas.objective = Eigen::VectorXd::Zero(n);
  feas.a_ineq = p.a_ineq.rows() ? p.a_ineq : Eigen::MatrixXd(0, n);
  feas.b_ineq = p.b_ineq;
  feas.a_eq = p.a_eq.rows() ? p.a_eq : Eigen::MatrixXd(0, n);
  feas.b_eq = p.b_eq;
  feas.lower = p.lower;
  feas.upper = p.upper;
  const SolveReport phase1 = simplex_solve(feas, tol);
  if (phase1.status == SolveStatus::kInfeasible) {
    report.status = SolveStatus::kInfeasible;
    report.message = "constraint set is empty";
    report.iterations = phase1.iterations;
    return report;
  }

  const Standard q = standardize(p);
  const IpmResult ipm = mehrotra(q, 1e-11);
  report.iterations = ipm.iterations;
  if (ipm.diverged) {
    report.status = SolveStatus::kUnbounded;
    report.message = "iterates diverged; objective unbounded below";
    return report;
  }

  Eigen::VectorXd x = ipm.x, y = ipm.y, z = ipm.z;
  const bool polished = polish(q, ipm, tol.feas_tol, x, y, z);

  report.x = x;
  report.objective = 0.5 * x.dot(p.hessian * x) + p.linear.dot(x);
  report.primal_residual = primal_violation(p.a_ineq, p.b_ineq, p.a_eq, p.b_eq, p.lower, p.upper, x);
  Eigen::VectorXd stationarity = q.h_mat * x + q.c;
  if (q.a.rows() > 0) stationarity += q.a.transpose() * y;
  if (q.g.rows() > 0) stationarity += q.g.transpose() * z;
  report.dual_residual = n ? stationarity.cwiseAbs().maxCoeff() : 0.0;

  report.dual_eq = Eigen::VectorXd::Zero(p.a_eq.rows());
  report.dual_ineq = Eigen::VectorXd::Zero(p.a_ineq.rows());
  report.reduced_costs = Eigen::VectorXd::Zero(n);
  for (size_t i = 0; i < q.eq_origin.size(); ++i) {
    const auto [origin, idx] = q.eq_origin[i];
    if (origin == Standard::Origin::kRow) report.dual_eq[idx] = y[i];
    else report.reduced_costs[idx] -= y[i];
  }
  for (size_t i = 0; i < q.ineq_origin.size(); ++i) {
    const auto [origin, idx] = q.ineq_origin[i];
    if (origin == Standard::Origin::kRow) report.dual_ineq[idx] = z[i];
    else if (origin == Standard::Origin::kLower) report.reduced_costs[idx] += z[i];
    else report.reduced_costs[idx] -= z[i];
  }

  const double scale = 1.0 + (p.linear.size() ? p.linear.cwiseAbs().maxCoeff() : 0.0) +
                       (n ? p.hessian.cwiseAbs().maxCoeff() * std::max(1.0, x.cwiseAbs().maxCoeff()) : 0.0);
  if (report.primal_residual > tol.feas_tol) {
    report.status = SolveStatus::kNumericalFailure;
    report.message = "final point violates constraints beyond feas_tol";
  } else if (!ipm.converged && !polished) {
    report.status = SolveStatus::kNumericalFailure;
    report.message = "interior point iteration limit reached";
  } else if (report.dual_residual > tol.opt_tol_qp * scale) {
    report.status = SolveStatus::kNumericalFailure;
    report.message = "KKT stationarity residual above opt_tol";
  } else {
    report.status = SolveStatus::kOptimal;
    report.message = polished ? "polished" : "interior";
  }
  return report;
}

}  // namespace pnpmpc::optim
