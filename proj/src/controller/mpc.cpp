#include <cmath>
#include <limits>
#include <stdexcept>

#include "pnpmpc/controller/controller.hpp"
#include "pnpmpc/optim/solvers.hpp"

namespace pnpmpc::ctrl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Offsets of y = [x_hat(0..N), v(0..N-1), beta, slack].
struct Layout {
  int n, m, N, nbeta, nslack;
  std::vector<int> block_start;

  int xh(int k) const { return k * n; }
  int v(int k) const { return (N + 1) * n + k * m; }
  int beta(int s, int f) const { return (N + 1) * n + N * m + block_start[s] + f; }
  int slack(int j) const { return (N + 1) * n + N * m + nbeta + j; }
  int size() const { return (N + 1) * n + N * m + nbeta + nslack; }
};

Layout make_layout(const TubeController& c, int nslack) {
  Layout l{c.sub.n(), c.sub.m(), c.weights.N, 0, nslack, {}};
  for (const auto& b : c.rci.Z.blocks) {
    l.block_start.push_back(l.nbeta);
    l.nbeta += b.size();
  }
  return l;
}

struct Rows {
  std::vector<Eigen::VectorXd> a;
  std::vector<double> b;

  void add(Eigen::VectorXd row, double rhs) {
    a.push_back(std::move(row));
    b.push_back(rhs);
  }
  void to(Eigen::MatrixXd& mat, Eigen::VectorXd& rhs, int cols) const {
    mat.resize(static_cast<int>(a.size()), cols);
    rhs.resize(static_cast<int>(b.size()));
    for (size_t i = 0; i < a.size(); ++i) {
      mat.row(i) = a[i].transpose();
      rhs[i] = b[i];
    }
  }
};

double stage_cost(const TubeController& c, const Eigen::VectorXd& dx, const Eigen::VectorXd& du) {
  if (c.weights.cost == CostMode::kL1) return (c.weights.Q * dx).lpNorm<1>() + (c.weights.R * du).lpNorm<1>();
  return dx.dot(c.weights.Q * dx) + du.dot(c.weights.R * du);
}

double terminal_cost(const TubeController& c, const Eigen::VectorXd& dx) {
  if (c.terminal.kind != TerminalData::Kind::kCustom) return 0.0;
  if (c.weights.cost == CostMode::kL1) return (c.terminal.S * dx).lpNorm<1>();
  return dx.dot(c.terminal.S * dx);
}

// x - x_o in Z with the setpoint an admissible equilibrium: the optimum is x_hat = x_o, v = u_o at zero cost.
bool try_shortcut(const TubeController& c, const Eigen::VectorXd& x, const Eigen::VectorXd& load,
                  const Eigen::VectorXd& xo, const Eigen::VectorXd& uo, const optim::ToleranceConfig& tol,
                  MpcSolution& out) {
  const auto& s = c.sub;
  Eigen::VectorXd drift = s.A * xo + s.B * uo - xo;
  if (s.L.cols() > 0) drift += s.L * load;
  if (drift.cwiseAbs().maxCoeff() > tol.feas_tol) return false;
  if (!geom::contains_point(c.Xhat, xo, 0.0) || !geom::contains_point(c.V, uo, 0.0)) return false;
  if (c.terminal.kind == TerminalData::Kind::kCustom &&
      !geom::contains_point(c.terminal.Xf, Eigen::VectorXd::Zero(s.n()), 0.0))
    return false;
  const auto cert = geom::member_aggregate(c.rci.Z, x - xo, tol.feas_tol);
  if (!cert.feasible) return false;
  const int N = c.weights.N;
  out.status = MpcSolution::Status::kFeasible;
  out.xhat = xo.replicate(1, N + 1);
  out.v = uo.replicate(1, N);
  out.xhat0 = xo;
  out.v0 = uo;
  out.beta = cert.beta;
  out.objective = 0.0;
  out.message = "setpoint shortcut";
  return true;
}

}  // namespace

void setpoint(const model::Subsystem& s, const Eigen::VectorXd& load, Eigen::VectorXd& xo, Eigen::VectorXd& uo) {
  if (load.size() == 0) {
    xo = Eigen::VectorXd::Zero(s.n());
    uo = Eigen::VectorXd::Zero(s.m());
    return;
  }
  if (load.size() != s.L.cols())
    throw std::invalid_argument("subsystem " + std::to_string(s.id) + ": load vector has wrong size");
  xo = s.setpoint_x * load;
  uo = s.setpoint_u * load;
}

MpcSolution solve_mpc(const TubeController& c, const Eigen::VectorXd& x, const Eigen::VectorXd& load,
                      const optim::ToleranceConfig& tol) {
  const auto& s = c.sub;
  const int n = s.n(), m = s.m(), N = c.weights.N;
  if (x.size() != n) throw std::invalid_argument("solve_mpc: state has wrong dimension");
  if (!x.allFinite()) throw std::invalid_argument("solve_mpc: non-finite state");
  Eigen::VectorXd xo, uo;
  setpoint(s, load, xo, uo);
  Eigen::VectorXd ld = load.size() ? load : Eigen::VectorXd::Zero(s.L.cols());

  MpcSolution out;
  if (try_shortcut(c, x, ld, xo, uo, tol, out)) return out;

  const bool l1 = c.weights.cost == CostMode::kL1;
  const bool custom = c.terminal.kind == TerminalData::Kind::kCustom;
  const int nslack = l1 ? N * (n + m) + (custom ? n : 0) : 0;
  const Layout lay = make_layout(c, nslack);
  const int nv = lay.size();
  const double sigma = c.rci.Z.sigma;

  Rows eq, in;
  // x - x_hat(0) in Z via convex weights.
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(nv);
    r[lay.xh(0) + i] = 1.0;
    for (size_t b = 0; b < c.rci.Z.blocks.size(); ++b) {
      const auto& verts = c.rci.Z.blocks[b].vertices;
      for (size_t f = 0; f < verts.size(); ++f) r[lay.beta(b, f)] = sigma * verts[f][i];
    }
    eq.add(std::move(r), x[i]);
  }
  for (size_t b = 0; b < c.rci.Z.blocks.size(); ++b) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(nv);
    for (int f = 0; f < c.rci.Z.blocks[b].size(); ++f) r[lay.beta(b, f)] = 1.0;
    eq.add(std::move(r), 1.0);
  }
  const Eigen::VectorXd lp = s.L.cols() > 0 ? Eigen::VectorXd(s.L * ld) : Eigen::VectorXd::Zero(n);
  for (int k = 0; k < N; ++k) {
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd r = Eigen::VectorXd::Zero(nv);
      r[lay.xh(k + 1) + i] = 1.0;
      r.segment(lay.xh(k), n) -= s.A.row(i).transpose();
      r.segment(lay.v(k), m) -= s.B.row(i).transpose();
      eq.add(std::move(r), lp[i]);
    }
  }
  for (int k = 0; k < N; ++k) {
    for (int j = 0; j < c.Xhat.rows(); ++j) {
      Eigen::VectorXd r = Eigen::VectorXd::Zero(nv);
      r.segment(lay.xh(k), n) = c.Xhat.C.row(j).transpose();
      in.add(std::move(r), c.Xhat.d[j]);
    }
    for (int j = 0; j < c.V.rows(); ++j) {
      Eigen::VectorXd r = Eigen::VectorXd::Zero(nv);
      r.segment(lay.v(k), m) = c.V.C.row(j).transpose();
      in.add(std::move(r), c.V.d[j]);
    }
  }
  if (custom) {
    const auto& xf = c.terminal.Xf;
    for (int j = 0; j < xf.rows(); ++j) {
      Eigen::VectorXd r = Eigen::VectorXd::Zero(nv);
      r.segment(lay.xh(N), n) = xf.C.row(j).transpose();
      in.add(std::move(r), xf.d[j] + xf.C.row(j).dot(xo));
    }
  }

  Eigen::VectorXd lower = Eigen::VectorXd::Constant(nv, -kInf), upper = Eigen::VectorXd::Constant(nv, kInf);
  lower.segment((N + 1) * n + N * m, lay.nbeta).setZero();
  if (!custom) lower.segment(lay.xh(N), n) = upper.segment(lay.xh(N), n) = xo;

  optim::SolveReport rep;
  if (l1) {
    // |W (y - ref)| <= slack, row by row.
    int j = 0;
    auto add_abs = [&](const Eigen::MatrixXd& w, int off, const Eigen::VectorXd& ref) {
      for (int i = 0; i < w.rows(); ++i, ++j) {
        for (double sign : {1.0, -1.0}) {
          Eigen::VectorXd r = Eigen::VectorXd::Zero(nv);
          r.segment(off, w.cols()) = sign * w.row(i).transpose();
          r[lay.slack(j)] = -1.0;
          in.add(std::move(r), sign * w.row(i).dot(ref));
        }
      }
    };
    for (int k = 0; k < N; ++k) {
      add_abs(c.weights.Q, lay.xh(k), xo);
      add_abs(c.weights.R, lay.v(k), uo);
    }
    if (custom) add_abs(c.terminal.S, lay.xh(N), xo);
    lower.tail(nslack).setZero();
    auto prob = optim::LinearProgram::with_variables(nv);
    prob.objective.tail(nslack).setOnes();
    eq.to(prob.a_eq, prob.b_eq, nv);
    in.to(prob.a_ineq, prob.b_ineq, nv);
    prob.lower = lower;
    prob.upper = upper;
    rep = optim::solve_lp(prob, tol);
  } else {
    optim::QuadraticProgram prob;
    prob.hessian = Eigen::MatrixXd::Zero(nv, nv);
    prob.linear = Eigen::VectorXd::Zero(nv);
    for (int k = 0; k < N; ++k) {
      prob.hessian.block(lay.xh(k), lay.xh(k), n, n) = 2.0 * c.weights.Q;
      prob.linear.segment(lay.xh(k), n) = -2.0 * c.weights.Q * xo;
      prob.hessian.block(lay.v(k), lay.v(k), m, m) = 2.0 * c.weights.R;
      prob.linear.segment(lay.v(k), m) = -2.0 * c.weights.R * uo;
    }
    if (custom) {
      const Eigen::MatrixXd ss = 0.5 * (c.terminal.S + c.terminal.S.transpose());
      prob.hessian.block(lay.xh(N), lay.xh(N), n, n) = 2.0 * ss;
      prob.linear.segment(lay.xh(N), n) = -2.0 * ss * xo;
    }
    eq.to(prob.a_eq, prob.b_eq, nv);
    in.to(prob.a_ineq, prob.b_ineq, nv);
    prob.lower = lower;
    prob.upper = upper;
    rep = optim::solve_qp(prob, tol);
  }

  if (rep.status == optim::SolveStatus::kInfeasible) {
    out.status = MpcSolution::Status::kInfeasible;
    out.message = "state outside the feasibility region";
    return out;
  }
  if (!rep.optimal()) {
    out.status = MpcSolution::Status::kSolverFailure;
    out.message = "solver: " + std::string(optim::to_string(rep.status)) + " " + rep.message;
    return out;
  }

  const Eigen::VectorXd& y = rep.x;
  out.xhat.resize(n, N + 1);
  out.v.resize(m, N);
  for (int k = 0; k <= N; ++k) out.xhat.col(k) = y.segment(lay.xh(k), n);
  for (int k = 0; k < N; ++k) out.v.col(k) = y.segment(lay.v(k), m);
  for (size_t b = 0; b < c.rci.Z.blocks.size(); ++b)
    out.beta.push_back(y.segment(lay.beta(b, 0), c.rci.Z.blocks[b].size()).cwiseMax(0.0));
  out.xhat0 = out.xhat.col(0);
  out.v0 = out.v.col(0);
  out.objective = terminal_cost(c, out.xhat.col(N) - xo);
  for (int k = 0; k < N; ++k) out.objective += stage_cost(c, out.xhat.col(k) - xo, out.v.col(k) - uo);
  out.status = MpcSolution::Status::kFeasible;
  return out;
}

}  // namespace pnpmpc::ctrl
