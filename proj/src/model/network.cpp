#include "pnpmpc/model/network.hpp"
#include "pnpmpc/model/hash.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

namespace pnpmpc::model {

namespace {

std::string tag(int id) { return "subsystem " + std::to_string(id); }

const std::set<int>& empty_set() {
  static const std::set<int> e;
  return e;
}

int matrix_rank(const Eigen::MatrixXd& m, double tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return 0;
  int r = 0;
  for (int i = 0; i < s.size(); ++i) r += s[i] > tol * std::max(1.0, s[0]);
  return r;
}

struct Fnv : Fnv1a {
  void subsystem(const Subsystem& s) {
    bytes("S" + std::to_string(s.id));
    matrix(s.A);
    matrix(s.B);
    matrix(s.X.C);
    matrix(s.X.d);
    matrix(s.U.C);
    matrix(s.U.d);
    if (s.X_vertices)
      for (const auto& v : s.X_vertices->vertices) matrix(v);
    matrix(s.L);
    matrix(s.setpoint_x);
    matrix(s.setpoint_u);
  }
};

}  // namespace

void Subsystem::normalize() {
  if (L.size() == 0) L = Eigen::MatrixXd::Zero(A.rows(), 0);
  if (setpoint_x.size() == 0) setpoint_x = Eigen::MatrixXd::Zero(A.rows(), L.cols());
  if (setpoint_u.size() == 0) setpoint_u = Eigen::MatrixXd::Zero(B.cols(), L.cols());
}

void Subsystem::validate() const {
  const int nn = n();
  if (nn == 0 || A.cols() != nn) throw std::invalid_argument(tag(id) + ": A must be square and nonempty");
  if (B.rows() != nn || B.cols() == 0) throw std::invalid_argument(tag(id) + ": B has wrong shape");
  if (!A.allFinite() || !B.allFinite()) throw std::invalid_argument(tag(id) + ": non-finite dynamics");
  X.validate();
  U.validate();
  if (X.dim() != nn) throw std::invalid_argument(tag(id) + ": X dimension mismatch");
  if (U.dim() != m()) throw std::invalid_argument(tag(id) + ": U dimension mismatch");
  if (!geom::origin_interior(X) || !geom::origin_interior(U))
    throw std::invalid_argument(tag(id) + ": X and U must contain the origin in their interior");
  if (X_vertices) {
    X_vertices->validate();
    if (X_vertices->dim() != nn) throw std::invalid_argument(tag(id) + ": X vertex dimension mismatch");
  }
  if (L.rows() != nn || setpoint_x.rows() != nn || setpoint_u.rows() != m() || setpoint_x.cols() != L.cols() ||
      setpoint_u.cols() != L.cols())
    throw std::invalid_argument(tag(id) + ": load or setpoint matrices have wrong shape");
  controllability_index(A, B);
}

void Network::add_subsystem(Subsystem s) {
  s.normalize();
  if (subsystems_.count(s.id)) throw std::invalid_argument(tag(s.id) + " already exists");
  const int id = s.id;
  subsystems_.emplace(id, std::move(s));
  rebuild_graph();
}

void Network::add_coupling(Coupling c) {
  if (c.from == c.to) throw std::invalid_argument("coupling from a subsystem to itself");
  if (!contains(c.from) || !contains(c.to))
    throw std::invalid_argument("coupling " + std::to_string(c.from) + "->" + std::to_string(c.to) +
                                " references an unknown subsystem");
  const auto& to = subsystem(c.to);
  const auto& from = subsystem(c.from);
  if (c.A.rows() != to.n() || c.A.cols() != from.n())
    throw std::invalid_argument("coupling " + std::to_string(c.from) + "->" + std::to_string(c.to) +
                                " has wrong shape");
  if (!c.A.allFinite() || c.A.isZero(0.0))
    throw std::invalid_argument("coupling matrices must be finite and nonzero");
  if (coupling(c.to, c.from)) throw std::invalid_argument("duplicate coupling");
  couplings_.push_back(std::move(c));
  rebuild_graph();
}

void Network::remove_subsystem(int id) {
  if (!contains(id)) throw std::invalid_argument("unknown " + tag(id));
  subsystems_.erase(id);
  std::erase_if(couplings_, [id](const Coupling& c) { return c.from == id || c.to == id; });
  rebuild_graph();
}

void Network::replace_coupling(const Coupling& c) {
  for (auto& old : couplings_) {
    if (old.to != c.to || old.from != c.from) continue;
    if (c.A.rows() != old.A.rows() || c.A.cols() != old.A.cols() || !c.A.allFinite())
      throw std::invalid_argument("replacement coupling " + std::to_string(c.from) + "->" + std::to_string(c.to) +
                                  " has wrong shape");
    old = c;
    return;
  }
  throw std::invalid_argument("no coupling " + std::to_string(c.from) + "->" + std::to_string(c.to) + " to replace");
}

const Subsystem& Network::subsystem(int id) const {
  auto it = subsystems_.find(id);
  if (it == subsystems_.end()) throw std::invalid_argument("unknown " + tag(id));
  return it->second;
}

Subsystem& Network::subsystem(int id) {
  auto it = subsystems_.find(id);
  if (it == subsystems_.end()) throw std::invalid_argument("unknown " + tag(id));
  return it->second;
}

std::vector<int> Network::ids() const {
  std::vector<int> out;
  for (const auto& [id, s] : subsystems_) out.push_back(id);
  return out;
}

const std::set<int>& Network::predecessors(int id) const {
  auto it = pred_.find(id);
  return it == pred_.end() ? empty_set() : it->second;
}

const std::set<int>& Network::successors(int id) const {
  auto it = succ_.find(id);
  return it == succ_.end() ? empty_set() : it->second;
}

const Coupling* Network::coupling(int to, int from) const {
  for (const auto& c : couplings_)
    if (c.to == to && c.from == from) return &c;
  return nullptr;
}

int Network::total_states() const {
  int t = 0;
  for (const auto& [id, s] : subsystems_) t += s.n();
  return t;
}

int Network::total_inputs() const {
  int t = 0;
  for (const auto& [id, s] : subsystems_) t += s.m();
  return t;
}

void Network::validate() const {
  for (const auto& [id, s] : subsystems_) {
    if (id != s.id) throw std::invalid_argument("subsystem key/id mismatch");
    s.validate();
  }
  for (const auto& c : couplings_) {
    if (!contains(c.from) || !contains(c.to)) throw std::invalid_argument("dangling coupling");
  }
}

void Network::rebuild_graph() {
  pred_.clear();
  succ_.clear();
  for (const auto& c : couplings_) {
    pred_[c.to].insert(c.from);
    succ_[c.from].insert(c.to);
  }
}

int controllability_index(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n || b.rows() != n) throw std::invalid_argument("controllability_index: shape mismatch");
  Eigen::MatrixXd ctrb(n, 0);
  Eigen::MatrixXd block = b;
  for (int k = 1; k <= n; ++k) {
    ctrb.conservativeResize(n, ctrb.cols() + b.cols());
    ctrb.rightCols(b.cols()) = block;
    if (matrix_rank(ctrb, tol) == n) return k;
    block = a * block;
  }
  throw std::domain_error("pair (A, B) is not controllable");
}

geom::VPolytope state_vertices(const Subsystem& s) {
  if (s.X_vertices) return *s.X_vertices;
  if (s.n() <= 3) return geom::enumerate_vertices(s.X);
  throw std::invalid_argument(tag(s.id) + ": state dimension " + std::to_string(s.n()) +
                              " needs explicit X vertices in the scenario (key \"X_vertices\")");
}

geom::VPolytope box_vertices(const Eigen::VectorXd& half) {
  const int n = static_cast<int>(half.size());
  geom::VPolytope p;
  for (int mask = 0; mask < (1 << n); ++mask) {
    Eigen::VectorXd v(n);
    for (int k = 0; k < n; ++k) v[k] = (mask >> k & 1) ? half[k] : -half[k];
    p.vertices.push_back(v);
  }
  return p;
}

geom::VAggregate disturbance_set(const Network& net, int id) {
  const auto& s = net.subsystem(id);
  geom::VAggregate w;
  for (int j : net.predecessors(id)) {
    w.blocks.push_back(geom::linear_image(net.coupling(id, j)->A, state_vertices(net.subsystem(j))));
  }
  if (w.blocks.empty()) w.blocks.push_back(geom::VPolytope::singleton(Eigen::VectorXd::Zero(s.n())));
  return w;
}

Discretized discretize_exact(const Eigen::MatrixXd& ac, const Eigen::MatrixXd& bc, const Eigen::MatrixXd& ec,
                             double ts) {
  if (!(ts > 0.0)) throw std::invalid_argument("sample time must be positive");
  if (!ac.allFinite() || !bc.allFinite() || !ec.allFinite())
    throw std::invalid_argument("discretize_exact: non-finite entries");
  const int n = static_cast<int>(ac.rows());
  if (ac.cols() != n || bc.rows() != n || (ec.size() > 0 && ec.rows() != n))
    throw std::invalid_argument("discretize_exact: shape mismatch");
  const int m = static_cast<int>(bc.cols());
  const int p = static_cast<int>(ec.cols());
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + m + p, n + m + p);
  aug.topLeftCorner(n, n) = ac * ts;
  aug.block(0, n, n, m) = bc * ts;
  if (p > 0) aug.block(0, n + m, n, p) = ec * ts;
  const Eigen::MatrixXd e = aug.exp();
  return {e.topLeftCorner(n, n), e.block(0, n, n, m), e.block(0, n + m, n, p)};
}

std::uint64_t fingerprint(const Subsystem& s) {
  Fnv f;
  f.subsystem(s);
  return f.h;
}

std::uint64_t fingerprint(const Network& net) {
  Fnv f;
  for (const auto& [id, s] : net.subsystems()) f.subsystem(s);
  auto cs = net.couplings();
  std::sort(cs.begin(), cs.end(), [](const Coupling& a, const Coupling& b) {
    return std::pair(a.to, a.from) < std::pair(b.to, b.from);
  });
  for (const auto& c : cs) {
    f.bytes("C" + std::to_string(c.from) + ">" + std::to_string(c.to));
    f.matrix(c.A);
    f.number(c.tie_gain);
  }
  return f.h;
}

}  // namespace pnpmpc::model
