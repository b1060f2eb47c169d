#include "pnpmpc/sim/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>

#include "pnpmpc/optim/solvers.hpp"
#include "pnpmpc/util/parallel.hpp"

namespace pnpmpc::sim {

namespace {

double row_excess(const geom::HPolytope& p, const Eigen::VectorXd& x) {
  return p.rows() == 0 ? -std::numeric_limits<double>::infinity() : (p.C * x - p.d).maxCoeff();
}

void check_config(const model::Network& net, const SimConfig& cfg) {
  if (cfg.steps < 0) throw std::invalid_argument("simulation length must be nonnegative");
  for (const auto& [id, x] : cfg.x0) {
    if (!net.contains(id)) throw std::invalid_argument("initial state for unknown subsystem " + std::to_string(id));
    if (x.size() != net.subsystem(id).n() || !x.allFinite())
      throw std::invalid_argument("initial state of subsystem " + std::to_string(id) + " is ill-formed");
  }
  for (const auto& l : cfg.loads) {
    if (!net.contains(l.id)) throw std::invalid_argument("load step for unknown subsystem " + std::to_string(l.id));
    if (l.time < 0 || (cfg.steps > 0 && l.time >= cfg.steps))
      throw std::invalid_argument("load step time outside [0, T)");
    if (l.value.size() != net.subsystem(l.id).L.cols() || !l.value.allFinite())
      throw std::invalid_argument("load step of subsystem " + std::to_string(l.id) + " has wrong size");
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

int SimTrace::infeasible_steps() const {
  int n = 0;
  for (const auto& row : steps)
    for (const auto& r : row) n += !r.feasible;
  return n;
}

int SimTrace::violations() const {
  int n = 0;
  for (const auto& row : steps)
    for (const auto& r : row) n += r.state_violation || r.input_violation;
  return n;
}

Eigen::VectorXd load_at(const model::Subsystem& s, const std::vector<LoadStep>& loads, int t) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(s.L.cols());
  int best = -1;
  for (const auto& l : loads) {
    if (l.id == s.id && l.time <= t && l.time >= best) {
      out = l.value;
      best = l.time;
    }
  }
  return out;
}

SimTrace run_policy(const model::Network& net, const Policy& policy, const SimConfig& cfg) {
  check_config(net, cfg);
  SimTrace trace;
  trace.ids = net.ids();
  const size_t m = trace.ids.size();
  std::map<int, Eigen::VectorXd> x;
  for (int id : trace.ids) {
    auto it = cfg.x0.find(id);
    x[id] = it != cfg.x0.end() ? it->second : Eigen::VectorXd::Zero(net.subsystem(id).n());
  }

  for (int t = 0; t < cfg.steps; ++t) {
    std::vector<StepRecord> row(m);
    util::parallel_for(m, cfg.threads, [&](size_t k) {
      const int id = trace.ids[k];
      const auto& s = net.subsystem(id);
      auto& r = row[k];
      r.t = t;
      r.id = id;
      r.x = x.at(id);
      const Eigen::VectorXd load = load_at(s, cfg.loads, t);
      ctrl::setpoint(s, s.L.cols() ? load : Eigen::VectorXd(), r.xo, r.uo);
      std::vector<ctrl::PredecessorState> preds;
      if (cfg.mode == ctrl::Mode::kDistributed)
        for (int j : net.predecessors(id)) preds.push_back({j, net.coupling(id, j)->A, x.at(j)});
      const auto t0 = std::chrono::steady_clock::now();
      const auto res = policy(id, r.x, s.L.cols() ? load : Eigen::VectorXd(),
                              cfg.mode == ctrl::Mode::kDistributed ? &preds : nullptr);
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      r.feasible = res.feasible;
      r.fell_back = res.fell_back;
      r.mu = res.mu;
      r.objective = res.objective;
      r.message = res.message;
      if (res.feasible) {
        r.u = res.u;
        r.v = res.v;
        r.xhat = res.xhat0;
      } else {
        r.u = Eigen::VectorXd::Zero(s.m());
        r.v = r.u;
        r.xhat = Eigen::VectorXd::Zero(s.n());
      }
      r.state_violation = row_excess(s.X, r.x) > cfg.violation_tol;
      r.input_violation = row_excess(s.U, r.u) > cfg.violation_tol;
    });
    trace.steps.push_back(row);

    for (const auto& r : row) {
      if (r.feasible) continue;
      if (trace.failed_step < 0) {
        trace.failed_step = t;
        trace.failed_id = r.id;
        trace.message = "step " + std::to_string(t) + ", subsystem " + std::to_string(r.id) + ": " + r.message;
      }
    }
    if (trace.failed_step == t && !cfg.record_failure) {
      trace.completed = false;
      trace.final_state = x;
      return trace;
    }

    std::map<int, Eigen::VectorXd> next;
    for (size_t k = 0; k < m; ++k) {
      const int id = trace.ids[k];
      const auto& s = net.subsystem(id);
      Eigen::VectorXd xn = s.A * x.at(id) + s.B * row[k].u;
      for (int j : net.predecessors(id)) xn += net.coupling(id, j)->A * x.at(j);
      if (s.L.cols() > 0) xn += s.L * load_at(s, cfg.loads, t);
      next[id] = std::move(xn);
    }
    x = std::move(next);
  }
  trace.final_state = x;
  return trace;
}

SimTrace run(const model::Network& net, const std::map<int, ctrl::TubeController>& controllers,
             const SimConfig& cfg) {
  for (int id : net.ids())
    if (!controllers.count(id)) throw std::invalid_argument("no controller for subsystem " + std::to_string(id));
  const Policy policy = [&](int id, const Eigen::VectorXd& x, const Eigen::VectorXd& load,
                            const std::vector<ctrl::PredecessorState>* preds) {
    return ctrl::step_control(controllers.at(id), x, load, preds);
  };
  return run_policy(net, policy, cfg);
}

NaiveMpc naive_mpc_controller(const model::Subsystem& sub, int N, Eigen::MatrixXd Q, Eigen::MatrixXd R) {
  if (N < 1) throw std::invalid_argument("horizon N must be at least 1");
  model::controllability_index(sub.A, sub.B);
  if (Q.size() == 0) Q = Eigen::MatrixXd::Identity(sub.n(), sub.n());
  if (R.size() == 0) R = Eigen::MatrixXd::Identity(sub.m(), sub.m());
  if (Q.rows() != sub.n() || Q.cols() != sub.n() || R.rows() != sub.m() || R.cols() != sub.m())
    throw std::invalid_argument("naive MPC weights have wrong shape");
  return {sub, N, std::move(Q), std::move(R)};
}

ctrl::StepResult naive_step(const NaiveMpc& c, const Eigen::VectorXd& x, const optim::ToleranceConfig& tol) {
  const auto& s = c.sub;
  const int n = s.n(), m = s.m(), N = c.N;
  if (x.size() != n || !x.allFinite()) throw std::invalid_argument("naive MPC: ill-formed state");
  ctrl::StepResult out;
  if (row_excess(s.X, x) > tol.feas_tol) {
    out.message = "state violates X_" + std::to_string(s.id);
    return out;
  }
  // y = [x(1..N), u(0..N-1)]
  const int nv = N * (n + m);
  auto xi = [n](int k) { return (k - 1) * n; };
  auto ui = [n, m, N](int k) { return N * n + k * m; };
  optim::QuadraticProgram p;
  p.hessian = Eigen::MatrixXd::Zero(nv, nv);
  p.linear = Eigen::VectorXd::Zero(nv);
  for (int k = 1; k < N; ++k) p.hessian.block(xi(k), xi(k), n, n) = 2.0 * c.Q;
  for (int k = 0; k < N; ++k) p.hessian.block(ui(k), ui(k), m, m) = 2.0 * c.R;
  p.a_eq = Eigen::MatrixXd::Zero(N * n, nv);
  p.b_eq = Eigen::VectorXd::Zero(N * n);
  for (int k = 0; k < N; ++k) {
    p.a_eq.block(k * n, xi(k + 1), n, n).setIdentity();
    p.a_eq.block(k * n, ui(k), n, m) = -s.B;
    if (k == 0)
      p.b_eq.head(n) = s.A * x;
    else
      p.a_eq.block(k * n, xi(k), n, n) = -s.A;
  }
  const int rx = s.X.rows(), ru = s.U.rows();
  p.a_ineq = Eigen::MatrixXd::Zero((N - 1) * rx + N * ru, nv);
  p.b_ineq.resize((N - 1) * rx + N * ru);
  for (int k = 1; k < N; ++k) {
    p.a_ineq.block((k - 1) * rx, xi(k), rx, n) = s.X.C;
    p.b_ineq.segment((k - 1) * rx, rx) = s.X.d;
  }
  for (int k = 0; k < N; ++k) {
    p.a_ineq.block((N - 1) * rx + k * ru, ui(k), ru, m) = s.U.C;
    p.b_ineq.segment((N - 1) * rx + k * ru, ru) = s.U.d;
  }
  p.lower = Eigen::VectorXd::Constant(nv, -std::numeric_limits<double>::infinity());
  p.upper = Eigen::VectorXd::Constant(nv, std::numeric_limits<double>::infinity());
  p.lower.segment(xi(N), n).setZero();
  p.upper.segment(xi(N), n).setZero();
  const auto rep = optim::solve_qp(p, tol);
  if (!rep.optimal()) {
    out.message = "naive MPC " + std::string(optim::to_string(rep.status));
    return out;
  }
  out.feasible = true;
  out.u = rep.x.segment(ui(0), m);
  out.v = out.u;
  out.xhat0 = x;
  out.objective = rep.objective + x.dot(c.Q * x);
  return out;
}

SimTrace run_naive(const model::Network& net, const std::map<int, NaiveMpc>& controllers, const SimConfig& cfg) {
  for (int id : net.ids())
    if (!controllers.count(id)) throw std::invalid_argument("no controller for subsystem " + std::to_string(id));
  const Policy policy = [&](int id, const Eigen::VectorXd& x, const Eigen::VectorXd&,
                            const std::vector<ctrl::PredecessorState>*) { return naive_step(controllers.at(id), x); };
  return run_policy(net, policy, cfg);
}

std::map<int, Eigen::VectorXd> perturbed_start(const std::map<int, ctrl::TubeController>& controllers,
                                               std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  std::map<int, Eigen::VectorXd> out;
  for (const auto& [id, c] : controllers) {
    const int n = c.sub.n();
    Eigen::VectorXd half(n);
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e[i] = 1.0;
      half[i] = std::min(geom::support_value(c.sub.X, e), geom::support_value(c.sub.X, -e));
    }
    Eigen::VectorXd dir(n);
    for (int i = 0; i < n; ++i) dir[i] = ud(rng) * half[i];
    Eigen::VectorXd x = scale * dir;
    for (int tries = 0; tries < 30 && !ctrl::solve_mpc(c, x).feasible(); ++tries) x *= 0.5;
    out[id] = x;
  }
  return out;
}

double eta_index(const SimTrace& trace, const std::map<int, Eigen::MatrixXd>& Q,
                 const std::map<int, Eigen::MatrixXd>& R) {
  if (trace.steps.empty()) throw std::invalid_argument("eta needs a nonempty trace");
  double sum = 0.0;
  for (const auto& row : trace.steps) {
    if (row.size() != trace.ids.size()) throw std::invalid_argument("trace rows have inconsistent length");
    for (const auto& r : row) {
      const Eigen::VectorXd dx = r.x - r.xo, du = r.u - r.uo;
      auto q = Q.find(r.id);
      auto rr = R.find(r.id);
      sum += q == Q.end() ? dx.squaredNorm() : dx.dot(q->second * dx);
      sum += rr == R.end() ? du.squaredNorm() : du.dot(rr->second * du);
    }
  }
  return sum / static_cast<double>(trace.steps.size());
}

std::vector<Tie> ties_of(const model::Network& net) {
  std::vector<Tie> out;
  for (const auto& c : net.couplings()) {
    if (!(c.tie_gain > 0.0))
      throw std::invalid_argument("missing tie-line gain P_" + std::to_string(c.to) + std::to_string(c.from));
    out.push_back({c.to, c.from, c.tie_gain});
  }
  std::sort(out.begin(), out.end(), [](const Tie& a, const Tie& b) { return std::pair(a.i, a.j) < std::pair(b.i, b.j); });
  return out;
}

double phi_index(const SimTrace& trace, const std::vector<Tie>& ties, double ts, int angle_index) {
  if (trace.steps.empty()) throw std::invalid_argument("phi needs a nonempty trace");
  double sum = 0.0;
  for (const auto& row : trace.steps) {
    std::map<int, double> theta;
    for (const auto& r : row) {
      if (angle_index < 0 || angle_index >= r.x.size()) throw std::invalid_argument("angle index out of range");
      theta[r.id] = r.x[angle_index];
    }
    for (const auto& tie : ties) {
      if (!theta.count(tie.i) || !theta.count(tie.j)) throw std::invalid_argument("tie line references unknown area");
      sum += std::abs(tie.gain * (theta[tie.i] - theta[tie.j])) * ts;
    }
  }
  return sum / static_cast<double>(trace.steps.size());
}

int settling_95(const SimTrace& trace) {
  std::vector<double> e;
  for (const auto& row : trace.steps) {
    double v = 0.0;
    for (const auto& r : row) v = std::max(v, (r.x - r.xo).cwiseAbs().maxCoeff());
    e.push_back(v);
  }
  const double peak = e.empty() ? 0.0 : *std::max_element(e.begin(), e.end());
  int last = -1;
  for (int t = 0; t < static_cast<int>(e.size()); ++t)
    if (e[t] > 0.05 * peak) last = t;
  if (last + 1 >= static_cast<int>(e.size()) && peak > 0.0) return -1;
  return last + 1;
}

double max_slack(const SimTrace& trace, const model::Network& net) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& row : trace.steps) {
    for (const auto& r : row) {
      const auto& s = net.subsystem(r.id);
      worst = std::max({worst, row_excess(s.X, r.x), row_excess(s.U, r.u)});
    }
  }
  for (const auto& [id, x] : trace.final_state) worst = std::max(worst, row_excess(net.subsystem(id).X, x));
  return worst;
}

Metrics metrics(const SimTrace& trace, const model::Network& net,
                const std::map<int, ctrl::TubeController>& controllers, const std::vector<Tie>& ties, double ts) {
  std::map<int, Eigen::MatrixXd> q, r;
  for (const auto& [id, c] : controllers) {
    q[id] = c.weights.Q;
    r[id] = c.weights.R;
  }
  Metrics m;
  if (!trace.steps.empty()) {
    m.eta = eta_index(trace, q, r);
    if (!ties.empty()) m.phi = phi_index(trace, ties, ts);
  }
  m.settling_95 = settling_95(trace);
  m.max_slack = max_slack(trace, net);
  return m;
}

void write_csv(const SimTrace& trace, std::ostream& out) {
  int n = 0, m = 0;
  for (const auto& row : trace.steps)
    for (const auto& r : row) {
      n = std::max(n, static_cast<int>(r.x.size()));
      m = std::max(m, static_cast<int>(r.u.size()));
    }
  out << "t,id";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  for (int i = 1; i <= m; ++i) out << ",u" << i;
  for (int i = 1; i <= m; ++i) out << ",v" << i;
  for (int i = 1; i <= n; ++i) out << ",xhat" << i;
  out << ",mu,feasible\n";
  auto cells = [&out](const Eigen::VectorXd& v, int width) {
    for (int i = 0; i < width; ++i) out << ',' << (i < v.size() ? fmt(v[i]) : "");
  };
  for (const auto& row : trace.steps) {
    for (const auto& r : row) {
      out << r.t << ',' << r.id;
      cells(r.x, n);
      cells(r.u, m);
      cells(r.v, m);
      cells(r.xhat, n);
      out << ',' << fmt(r.mu) << ',' << (r.feasible ? 1 : 0) << '\n';
    }
  }
}

}  // namespace pnpmpc::sim
