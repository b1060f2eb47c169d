#include "pnpmpc/controller/controller.hpp"

#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "pnpmpc/model/hash.hpp"

namespace pnpmpc::ctrl {

namespace {

bool is_psd(const Eigen::MatrixXd& m, double floor) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff())) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= floor;
}

geom::HPolytope erode_aggregate(geom::HPolytope set, const std::vector<geom::VPolytope>& blocks, double sigma,
                                const optim::ToleranceConfig& tol, bool& empty) {
  empty = false;
  for (const auto& b : blocks) {
    auto r = geom::erode_by_vpolytope(set, b, sigma, tol);
    if (r.empty) {
      empty = true;
      return set;
    }
    set = std::move(r.set);
  }
  return set;
}

void weights_check(const model::Subsystem& sub, MpcWeights& w) {
  const int n = sub.n(), m = sub.m();
  if (w.N < 1) throw std::invalid_argument("horizon N must be at least 1");
  if (w.Q.size() == 0) w.Q = Eigen::MatrixXd::Identity(n, n);
  if (w.R.size() == 0) w.R = Eigen::MatrixXd::Identity(m, m);
  if (w.Q.rows() != n || w.Q.cols() != n) throw std::invalid_argument("Q has wrong shape");
  if (w.R.rows() != m || w.R.cols() != m) throw std::invalid_argument("R has wrong shape");
  if (!w.Q.allFinite() || !w.R.allFinite()) throw std::invalid_argument("non-finite weights");
  if (!is_psd(w.Q, -1e-10)) throw std::invalid_argument("Q must be symmetric positive semidefinite");
  if (!is_psd(w.R, 1e-12)) throw std::invalid_argument("R must be symmetric positive definite");
}

}  // namespace

TightenedSets tighten_sets(const geom::HPolytope& x, const geom::HPolytope& u, const rci::RciDesign& d,
                           const optim::ToleranceConfig& tol) {
  TightenedSets out;
  const double sigma = d.Z.sigma;
  bool empty = false;
  out.Xhat = erode_aggregate(geom::remove_redundant(x, tol), d.Z.blocks, sigma, tol, empty);
  if (empty) {
    out.reason = "X (-) Z is empty; coupling too strong for this subsystem";
    return out;
  }
  out.V = erode_aggregate(geom::remove_redundant(u, tol), d.Uz.blocks, sigma, tol, empty);
  if (empty) {
    out.reason = "U (-) U_z is empty";
    return out;
  }
  if (!geom::origin_interior(out.Xhat) || !geom::origin_interior(out.V)) {
    out.reason = "tightened sets do not contain the origin in their interior";
    return out;
  }
  out.ok = true;
  return out;
}

std::string validate_terminal(const TubeController& c) {
  const auto& t = c.terminal;
  if (t.kind == TerminalData::Kind::kZero) return {};
  const int n = c.sub.n(), m = c.sub.m();
  if (t.S.rows() != n || t.S.cols() != n) return "terminal weight S has wrong shape";
  if (t.K_aux.rows() != m || t.K_aux.cols() != n) return "K_aux has wrong shape";
  if (!is_psd(t.S, -1e-10)) return "terminal weight S is not positive semidefinite";
  try {
    t.Xf.validate();
  } catch (const std::exception& e) {
    return std::string("terminal set: ") + e.what();
  }
  if (t.Xf.dim() != n) return "terminal set has wrong dimension";

  Eigen::VectorXd xo, uo;
  setpoint(c.sub, {}, xo, uo);
  const double tol = 1e-8;
  for (int r = 0; r < c.Xhat.rows(); ++r) {
    const Eigen::VectorXd cr = c.Xhat.C.row(r).transpose();
    if (geom::support_value(t.Xf, cr) + cr.dot(xo) > c.Xhat.d[r] + tol) return "(i) terminal set not inside X_hat";
  }

  geom::VPolytope verts;
  if (t.Xf_vertices) {
    verts = *t.Xf_vertices;
  } else if (n <= 3) {
    verts = geom::enumerate_vertices(t.Xf);
  } else {
    return "terminal set vertices are required when the state dimension exceeds 3";
  }
  const Eigen::MatrixXd acl = c.sub.A + c.sub.B * t.K_aux;
  for (const auto& v : verts.vertices) {
    if (!geom::contains_point(t.Xf, acl * v, tol)) return "(ii) terminal set is not invariant under A + B K_aux";
    if (!geom::contains_point(c.V, t.K_aux * v + uo, tol)) return "(iii) K_aux x leaves V on the terminal set";
  }

  const Eigen::MatrixXd lyap =
      acl.transpose() * t.S * acl - t.S + c.weights.Q + t.K_aux.transpose() * c.weights.R * t.K_aux;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (lyap + lyap.transpose()), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().maxCoeff() > 1e-8) return "(iv) terminal cost is not a Lyapunov function";
  return {};
}

DesignResult design_controller(const model::Subsystem& sub, const geom::VAggregate& w, const ControllerConfig& cfg) {
  DesignResult out;
  MpcWeights weights = cfg.weights;
  weights_check(sub, weights);

  auto r = rci::synthesize_rci(sub, w, cfg.rci);
  out.attempted_k = r.attempted_k;
  if (!r.ok) {
    out.reason = r.reason;
    return out;
  }
  auto sets = tighten_sets(sub.X, sub.U, r.design, cfg.rci.tol);
  if (!sets.ok) {
    out.reason = sets.reason;
    return out;
  }
  out.controller = {sub, std::move(r.design), std::move(sets.Xhat), std::move(sets.V), weights, cfg.terminal};
  if (auto why = validate_terminal(out.controller); !why.empty()) {
    out.reason = why;
    return out;
  }
  out.ok = true;
  return out;
}

DesignResult design_controller(const model::Network& net, int id, const ControllerConfig& cfg) {
  return design_controller(net.subsystem(id), model::disturbance_set(net, id), cfg);
}

std::uint64_t fingerprint(const TubeController& c) {
  model::Fnv1a f;
  f.bytes(std::to_string(model::fingerprint(c.sub)));
  f.number(c.rci.k);
  f.number(c.rci.alpha);
  f.number(c.rci.omega);
  for (const auto* agg : {&c.rci.Z, &c.rci.Uz}) {
    f.number(agg->sigma);
    for (const auto& b : agg->blocks)
      for (const auto& v : b.vertices) f.matrix(v);
  }
  f.matrix(c.Xhat.C);
  f.matrix(c.Xhat.d);
  f.matrix(c.V.C);
  f.matrix(c.V.d);
  f.number(c.weights.N);
  f.matrix(c.weights.Q);
  f.matrix(c.weights.R);
  f.number(static_cast<int>(c.weights.cost));
  f.number(static_cast<int>(c.terminal.kind));
  if (c.terminal.kind == TerminalData::Kind::kCustom) {
    f.matrix(c.terminal.S);
    f.matrix(c.terminal.K_aux);
    f.matrix(c.terminal.Xf.C);
    f.matrix(c.terminal.Xf.d);
  }
  return f.h;
}

}  // namespace pnpmpc::ctrl
