#include "pnpmpc/rci/rci.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "pnpmpc/optim/solvers.hpp"

namespace pnpmpc::rci {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double default_omega(const geom::VAggregate& w, const geom::HPolytope& x) {
  double gap = kInf;
  for (int r = 0; r < x.rows(); ++r) {
    const Eigen::VectorXd c = x.C.row(r).transpose();
    gap = std::min(gap, (x.d[r] - geom::support_value(w, c)) / c.norm());
  }
  return 0.01 * gap;
}

geom::VPolytope build_z0(const geom::VAggregate& w, double omega, const geom::HPolytope& x) {
  if (!(omega > 0.0)) throw std::invalid_argument("omega must be positive");
  w.validate();
  Eigen::VectorXd lo, hi;
  geom::bounding_box(w, lo, hi);
  lo.array() -= omega;
  hi.array() += omega;
  const int n = static_cast<int>(lo.size());
  geom::VPolytope z0;
  z0.vertices.push_back(Eigen::VectorXd::Zero(n));
  for (int mask = 0; mask < (1 << n); ++mask) {
    Eigen::VectorXd v(n);
    for (int j = 0; j < n; ++j) v[j] = (mask >> j & 1) ? hi[j] : lo[j];
    z0.vertices.push_back(v);
  }
  for (const auto& v : z0.vertices) {
    if (((x.C * v - x.d).array() > -1e-9).any())
      throw Z0Error("cannot construct Z0: inflated disturbance box leaves the interior of X");
  }
  return z0;
}

ThetaLayout theta_layout(const model::Subsystem& sub, int k, int q) {
  ThetaLayout t;
  t.n = sub.n();
  t.m = sub.m();
  t.k = k;
  t.q = q;
  t.l = sub.U.rows();
  t.g = sub.X.rows();
  return t;
}

optim::LinearProgram assemble_theta(const model::Subsystem& sub, const geom::VPolytope& z0, int k,
                                    Objective objective, const optim::ToleranceConfig& tol) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  const int q = z0.size();
  if (q < sub.n() + 1) throw std::invalid_argument("Z0 needs at least n + 1 vertices");
  if (z0.dim() != sub.n()) throw std::invalid_argument("Z0 dimension mismatch");
  if (!z0.vertices.front().isZero(0.0)) throw std::invalid_argument("first vertex of Z0 must be the origin");

  const ThetaLayout t = theta_layout(sub, k, q);
  const int n = t.n, m = t.m;
  const double eps = tol.strict_margin;
  auto lp = optim::LinearProgram::with_variables(t.size());

  const int n_eq = k * q * n + q * n;
  const int n_in = q + t.l + t.l * k * q + t.g + t.g * k * q;
  lp.a_eq = Eigen::MatrixXd::Zero(n_eq, t.size());
  lp.b_eq = Eigen::VectorXd::Zero(n_eq);
  lp.a_ineq = Eigen::MatrixXd::Zero(n_in, t.size());
  lp.b_ineq = Eigen::VectorXd::Zero(n_in);

  // z(s+1,f) - A z(s,f) - B u(s,f) = 0
  int row = 0;
  for (int s = 0; s < k; ++s) {
    for (int f = 0; f < q; ++f, row += n) {
      lp.a_eq.block(row, t.z(s + 1, f), n, n) = Eigen::MatrixXd::Identity(n, n);
      lp.a_eq.block(row, t.u(s, f), n, m) = -sub.B;
      if (s == 0)
        lp.b_eq.segment(row, n) = sub.A * z0.vertices[f];
      else
        lp.a_eq.block(row, t.z(s, f), n, n) = -sub.A;
    }
  }
  // z(k,f1) = sum_f2 rho(f1,f2) z0(f2)
  for (int f1 = 0; f1 < q; ++f1, row += n) {
    lp.a_eq.block(row, t.z(k, f1), n, n) = Eigen::MatrixXd::Identity(n, n);
    for (int f2 = 0; f2 < q; ++f2) lp.a_eq.block(row, t.rho(f1, f2), n, 1) = -z0.vertices[f2];
  }

  row = 0;
  for (int f1 = 0; f1 < q; ++f1, ++row) {
    for (int f2 = 0; f2 < q; ++f2) lp.a_ineq(row, t.rho(f1, f2)) = 1.0;
    lp.a_ineq(row, t.alpha()) = -1.0;
  }
  for (int r = 0; r < t.l; ++r) {
    for (int s = 0; s < k; ++s) lp.a_ineq(row, t.psi(r, s)) = 1.0;
    lp.a_ineq(row, t.alpha()) = sub.U.d[r];
    lp.b_ineq[row++] = sub.U.d[r] - eps;
    for (int s = 0; s < k; ++s) {
      for (int f = 0; f < q; ++f, ++row) {
        lp.a_ineq.block(row, t.u(s, f), 1, m) = sub.U.C.row(r);
        lp.a_ineq(row, t.psi(r, s)) = -1.0;
      }
    }
  }
  for (int r = 0; r < t.g; ++r) {
    for (int s = 0; s < k; ++s) lp.a_ineq(row, t.gamma(r, s)) = 1.0;
    lp.a_ineq(row, t.alpha()) = sub.X.d[r];
    lp.b_ineq[row++] = sub.X.d[r] - eps;
    for (int s = 0; s < k; ++s) {
      for (int f = 0; f < q; ++f, ++row) {
        if (s == 0)
          lp.b_ineq[row] = -sub.X.C.row(r).dot(z0.vertices[f]);
        else
          lp.a_ineq.block(row, t.z(s, f), 1, n) = sub.X.C.row(r);
        lp.a_ineq(row, t.gamma(r, s)) = -1.0;
      }
    }
  }

  lp.lower = Eigen::VectorXd::Constant(t.size(), -kInf);
  lp.upper = Eigen::VectorXd::Constant(t.size(), kInf);
  for (int f1 = 0; f1 < q; ++f1)
    for (int f2 = 0; f2 < q; ++f2) lp.lower[t.rho(f1, f2)] = 0.0;
  for (int s = 0; s < k; ++s) {
    lp.lower.segment(t.z(s + 1, 0), n).setZero();
    lp.upper.segment(t.z(s + 1, 0), n).setZero();
    lp.lower.segment(t.u(s, 0), m).setZero();
    lp.upper.segment(t.u(s, 0), m).setZero();
  }
  lp.lower[t.alpha()] = 0.0;
  lp.upper[t.alpha()] = 1.0 - eps;
  if (objective == Objective::kMinAlpha) lp.objective[t.alpha()] = 1.0;
  return lp;
}

bool verify_inclusions(const model::Subsystem& sub, const RciDesign& d, double margin) {
  for (int r = 0; r < sub.X.rows(); ++r) {
    if (geom::support_value(d.Z, sub.X.C.row(r).transpose()) > sub.X.d[r] - margin) return false;
  }
  for (int r = 0; r < sub.U.rows(); ++r) {
    if (geom::support_value(d.Uz, sub.U.C.row(r).transpose()) > sub.U.d[r] - margin) return false;
  }
  return true;
}

RciResult synthesize_rci(const model::Subsystem& sub, const geom::VAggregate& w, const RciConfig& cfg) {
  RciResult res;
  const int ci = model::controllability_index(sub.A, sub.B);
  if (cfg.k > 0 && cfg.k < ci)
    throw std::invalid_argument("k = " + std::to_string(cfg.k) + " is below the controllability index " +
                                std::to_string(ci));
  const int k0 = cfg.k > 0 ? cfg.k : ci;

  const double omega = cfg.omega > 0.0 ? cfg.omega : default_omega(w, sub.X);
  if (!(omega > 0.0)) {
    res.reason = "disturbance set is not strictly inside X; no omega > 0 exists";
    return res;
  }
  geom::VPolytope z0;
  try {
    z0 = build_z0(w, omega, sub.X);
  } catch (const Z0Error& e) {
    res.reason = e.what();
    return res;
  }

  for (int k = k0; k <= k0 + std::max(0, cfg.retries); ++k) {
    res.attempted_k.push_back(k);
    const auto lp = assemble_theta(sub, z0, k, cfg.objective, cfg.tol);
    const auto rep = optim::solve_lp(lp, cfg.tol);
    if (!rep.optimal()) {
      res.reason = "Theta LP " + std::string(optim::to_string(rep.status)) + " for k = " + std::to_string(k);
      continue;
    }
    const ThetaLayout t = theta_layout(sub, k, z0.size());
    RciDesign d;
    d.k = k;
    d.alpha = std::max(0.0, rep.x[t.alpha()]);
    d.omega = omega;
    d.W = w;
    d.z0 = z0;
    d.z_blocks.push_back(z0);
    for (int s = 0; s <= k; ++s) {
      geom::VPolytope zb, ub;
      for (int f = 0; f < t.q; ++f) {
        if (s > 0) zb.vertices.push_back(rep.x.segment(t.z(s, f), t.n));
        if (s < k) ub.vertices.push_back(rep.x.segment(t.u(s, f), t.m));
      }
      if (s > 0 && s < k) d.z_blocks.push_back(zb);
      if (s == k) d.z_terminal = zb;
      if (s < k) d.u_blocks.push_back(ub);
    }
    d.rho.resize(t.q, t.q);
    for (int f1 = 0; f1 < t.q; ++f1)
      for (int f2 = 0; f2 < t.q; ++f2) d.rho(f1, f2) = rep.x[t.rho(f1, f2)];
    const double sigma = 1.0 / (1.0 - d.alpha);
    d.Z = {d.z_blocks, sigma};
    d.Uz = {d.u_blocks, sigma};
    if (!verify_inclusions(sub, d)) {
      res.reason = "Theta solution violates the X / U inclusions beyond tolerance for k = " + std::to_string(k);
      continue;
    }
    res.ok = true;
    res.reason.clear();
    res.design = std::move(d);
    return res;
  }
  return res;
}

RciResult synthesize_rci(const model::Network& net, int id, const RciConfig& cfg) {
  return synthesize_rci(net.subsystem(id), model::disturbance_set(net, id), cfg);
}

}  // namespace pnpmpc::rci
