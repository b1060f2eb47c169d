#include <algorithm>
#include <limits>
#include <stdexcept>

#include "pnpmpc/controller/controller.hpp"
#include "pnpmpc/optim/solvers.hpp"

namespace pnpmpc::ctrl {

namespace {

int weight_count(const rci::RciDesign& d) {
  int q = 0;
  for (const auto& b : d.Z.blocks) q += b.size();
  return q;
}

// Columns [beta, mu, extra...] with sum_f beta(s, f) = mu; returns the first
// n equality rows so callers can fill the point to be represented.
optim::LinearProgram weights_lp(const rci::RciDesign& d, int extra) {
  const int n = d.Z.dim();
  const int q = weight_count(d);
  const int nb = static_cast<int>(d.Z.blocks.size());
  auto p = optim::LinearProgram::with_variables(q + 1 + extra);
  p.objective[q] = 1.0;
  p.a_eq = Eigen::MatrixXd::Zero(n + nb, q + 1 + extra);
  p.b_eq = Eigen::VectorXd::Zero(n + nb);
  int col = 0;
  for (int s = 0; s < nb; ++s) {
    for (const auto& z : d.Z.blocks[s].vertices) {
      p.a_eq.block(0, col, n, 1) = d.Z.sigma * z;
      p.a_eq(n + s, col) = 1.0;
      ++col;
    }
    p.a_eq(n + s, q) = -1.0;
  }
  p.lower = Eigen::VectorXd::Constant(q + 1 + extra, -std::numeric_limits<double>::infinity());
  p.lower.head(q + 1).setZero();
  p.upper = Eigen::VectorXd::Constant(q + 1 + extra, std::numeric_limits<double>::infinity());
  return p;
}

void unpack(const rci::RciDesign& d, const Eigen::VectorXd& y, KappaResult& out) {
  const int q = weight_count(d);
  out.mu = std::max(0.0, y[q]);
  out.u = Eigen::VectorXd::Zero(d.Uz.dim());
  int col = 0;
  for (size_t s = 0; s < d.Z.blocks.size(); ++s) {
    Eigen::VectorXd b = y.segment(col, d.Z.blocks[s].size()).cwiseMax(0.0);
    for (int f = 0; f < b.size(); ++f) out.u += d.Uz.sigma * b[f] * d.Uz.blocks[s].vertices[f];
    out.beta.push_back(std::move(b));
    col += d.Z.blocks[s].size();
  }
}

}  // namespace

KappaResult kappa_bar(const rci::RciDesign& d, const Eigen::VectorXd& z, const optim::ToleranceConfig& tol) {
  const int n = d.Z.dim();
  if (z.size() != n) throw std::invalid_argument("kappa_bar: error state has wrong dimension");
  if (!z.allFinite()) throw std::invalid_argument("kappa_bar: non-finite error state");
  KappaResult out;
  if (z.isZero(0.0)) {
    out.ok = true;
    out.u = Eigen::VectorXd::Zero(d.Uz.dim());
    for (const auto& b : d.Z.blocks) out.beta.push_back(Eigen::VectorXd::Zero(b.size()));
    return out;
  }
  auto p = weights_lp(d, 0);
  p.b_eq.head(n) = z;
  const auto rep = optim::solve_lp(p, tol);
  if (!rep.optimal()) {
    out.message = "kappa LP: " + std::string(optim::to_string(rep.status));
    return out;
  }
  unpack(d, rep.x, out);
  out.ok = true;
  return out;
}

KappaResult kappa_bar_dis(const rci::RciDesign& d, const model::Subsystem& sub, const Eigen::VectorXd& z,
                          const Eigen::VectorXd& v, const std::vector<PredecessorState>& preds,
                          const optim::ToleranceConfig& tol) {
  const int n = sub.n(), m = sub.m();
  if (z.size() != n || v.size() != m) throw std::invalid_argument("kappa_bar_dis: wrong dimensions");
  Eigen::VectorXd target = sub.A * z;
  for (const auto& p : preds) {
    if (p.A.rows() != n || p.A.cols() != p.x.size())
      throw std::invalid_argument("kappa_bar_dis: predecessor " + std::to_string(p.id) + " has wrong shape");
    target += p.A * p.x;
  }
  if (!target.allFinite()) throw std::invalid_argument("kappa_bar_dis: non-finite data");

  const int q = weight_count(d);
  auto p = weights_lp(d, m);
  p.a_eq.block(0, q + 1, n, m) = -sub.B;
  p.b_eq.head(n) = target;
  p.a_ineq = Eigen::MatrixXd::Zero(sub.U.rows(), q + 1 + m);
  p.a_ineq.rightCols(m) = sub.U.C;
  p.b_ineq = sub.U.d - sub.U.C * v;

  KappaResult out;
  const auto rep = optim::solve_lp(p, tol);
  if (!rep.optimal()) {
    out.message = "distributed kappa LP: " + std::string(optim::to_string(rep.status));
    return out;
  }
  const int nb = static_cast<int>(d.Z.blocks.size());
  out.mu = std::max(0.0, rep.x[q]);
  int col = 0;
  for (int s = 0; s < nb; ++s) {
    out.beta.push_back(rep.x.segment(col, d.Z.blocks[s].size()).cwiseMax(0.0));
    col += d.Z.blocks[s].size();
  }
  out.u = rep.x.tail(m);
  out.ok = true;
  return out;
}

StepResult step_control(const TubeController& c, const Eigen::VectorXd& x, const Eigen::VectorXd& load,
                        const std::vector<PredecessorState>* preds, const optim::ToleranceConfig& tol) {
  StepResult out;
  const auto sol = solve_mpc(c, x, load, tol);
  out.objective = sol.objective;
  if (!sol.feasible()) {
    out.message = sol.message;
    return out;
  }
  out.v = sol.v0;
  out.xhat0 = sol.xhat0;
  const Eigen::VectorXd z = x - sol.xhat0;

  // Without a predecessor contribution there is nothing to anticipate.
  bool coupled = false;
  if (preds)
    for (const auto& p : *preds) coupled = coupled || !(p.A * p.x).isZero(0.0);

  KappaResult k;
  if (coupled) {
    k = kappa_bar_dis(c.rci, c.sub, z, sol.v0, *preds, tol);
    if (!k.ok) {
      out.fell_back = true;
      out.message = k.message + "; using the decentralized law";
    }
  }
  if (!coupled || !k.ok) k = kappa_bar(c.rci, z, tol);
  if (!k.ok) {
    out.message = k.message;
    return out;
  }
  out.mu = k.mu;
  out.u = sol.v0 + k.u;
  out.feasible = true;
  return out;
}

}  // namespace pnpmpc::ctrl
