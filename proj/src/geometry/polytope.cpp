#include "pnpmpc/geometry/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/LU>

#include "pnpmpc/optim/solvers.hpp"

namespace pnpmpc::geom {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_dim(int expected, int got, const char* what) {
  if (expected != got) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(expected) +
                                " vs " + std::to_string(got) + ")");
  }
}

HPolytope stack(const HPolytope& a, const HPolytope& b) {
  HPolytope out;
  out.C.resize(a.rows() + b.rows(), std::max(a.dim(), b.dim()));
  out.d.resize(a.rows() + b.rows());
  if (a.rows()) out.C.topRows(a.rows()) = a.C, out.d.head(a.rows()) = a.d;
  if (b.rows()) out.C.bottomRows(b.rows()) = b.C, out.d.tail(b.rows()) = b.d;
  return out;
}

// Andrew's monotone chain; returns the strict hull in counter-clockwise order.
std::vector<Eigen::VectorXd> hull_2d(std::vector<Eigen::VectorXd> pts) {
  std::sort(pts.begin(), pts.end(), [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
  });
  if (pts.size() < 3) return pts;
  auto cross = [](const Eigen::VectorXd& o, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<Eigen::VectorXd> h(2 * pts.size());
  size_t k = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 1e-14) --k;
    h[k++] = pts[i];
  }
  for (size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i - 1]) <= 1e-14) --k;
    h[k++] = pts[i - 1];
  }
  h.resize(k - 1);
  return h;
}

}  // namespace

HPolytope::HPolytope(Eigen::MatrixXd c, Eigen::VectorXd rhs) : C(std::move(c)), d(std::move(rhs)) {}

HPolytope HPolytope::box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  const int n = static_cast<int>(lo.size());
  require_dim(n, static_cast<int>(hi.size()), "box");
  HPolytope p;
  p.C = Eigen::MatrixXd::Zero(2 * n, n);
  p.d.resize(2 * n);
  for (int i = 0; i < n; ++i) {
    p.C(2 * i, i) = 1.0;
    p.d[2 * i] = hi[i];
    p.C(2 * i + 1, i) = -1.0;
    p.d[2 * i + 1] = -lo[i];
  }
  return p;
}

HPolytope HPolytope::symmetric_box(const Eigen::VectorXd& half_width) { return box(-half_width, half_width); }

void HPolytope::validate() const {
  if (C.rows() != d.size()) throw std::invalid_argument("HPolytope: C rows do not match d length");
  if (!C.allFinite() || !d.allFinite()) throw std::invalid_argument("HPolytope: non-finite entry");
  for (int r = 0; r < rows(); ++r) {
    if (C.row(r).cwiseAbs().maxCoeff() == 0.0) {
      throw std::invalid_argument("HPolytope: zero row " + std::to_string(r));
    }
  }
}

VPolytope VPolytope::singleton(const Eigen::VectorXd& point) { return VPolytope({point}); }

void VPolytope::validate() const {
  if (vertices.empty()) throw std::invalid_argument("VPolytope: no vertices");
  for (const auto& v : vertices) {
    require_dim(dim(), static_cast<int>(v.size()), "VPolytope");
    if (!v.allFinite()) throw std::invalid_argument("VPolytope: non-finite vertex");
  }
}

void VAggregate::validate() const {
  if (blocks.empty()) throw std::invalid_argument("VAggregate: no blocks");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("VAggregate: sigma must be finite and positive");
  for (const auto& b : blocks) {
    b.validate();
    require_dim(dim(), b.dim(), "VAggregate");
  }
}

VPolytope linear_image(const Eigen::MatrixXd& a, const VPolytope& p) {
  VPolytope out;
  out.vertices.reserve(p.vertices.size());
  for (const auto& v : p.vertices) {
    require_dim(static_cast<int>(a.cols()), static_cast<int>(v.size()), "linear_image");
    out.vertices.emplace_back(a * v);
  }
  return out;
}

VPolytope minkowski_sum_v(const VPolytope& p, const VPolytope& q, bool reduce) {
  require_dim(p.dim(), q.dim(), "minkowski_sum_v");
  VPolytope out;
  out.vertices.reserve(p.vertices.size() * q.vertices.size());
  for (const auto& a : p.vertices) {
    for (const auto& b : q.vertices) out.vertices.emplace_back(a + b);
  }
  if (!reduce) return out;
  if (out.dim() == 2) {
    out.vertices = hull_2d(std::move(out.vertices));
    return out;
  }
  std::vector<Eigen::VectorXd> unique;
  for (const auto& v : out.vertices) {
    const bool seen = std::any_of(unique.begin(), unique.end(), [&](const Eigen::VectorXd& u) { return u == v; });
    if (!seen) unique.push_back(v);
  }
  out.vertices = std::move(unique);
  return out;
}

VPolytope expand_aggregate(const VAggregate& z) {
  VPolytope acc = z.blocks.front();
  for (size_t s = 1; s < z.blocks.size(); ++s) acc = minkowski_sum_v(acc, z.blocks[s], true);
  for (auto& v : acc.vertices) v *= z.sigma;
  return acc;
}

ErosionResult erode_by_ball(const HPolytope& x, double beta, const optim::ToleranceConfig& tol) {
  if (beta < 0.0) throw std::invalid_argument("erode_by_ball: negative radius");
  ErosionResult out;
  out.set = x;
  for (int r = 0; r < x.rows(); ++r) out.set.d[r] = x.d[r] - beta * x.C.row(r).norm();
  out.empty = is_empty(out.set, tol);
  return out;
}

ErosionResult erode_by_vpolytope(const HPolytope& x, const VPolytope& p, double sigma,
                                 const optim::ToleranceConfig& tol) {
  if (!(sigma > 0.0)) throw std::invalid_argument("erode_by_vpolytope: sigma must be positive");
  require_dim(x.dim(), p.dim(), "erode_by_vpolytope");
  ErosionResult out;
  HPolytope acc;
  acc.C.resize(0, x.dim());
  acc.d.resize(0);
  for (const auto& v : p.vertices) {
    HPolytope shifted = x;
    shifted.d -= sigma * (x.C * v);
    acc = stack(acc, shifted);
    if (is_empty(acc, tol)) {
      out.set = acc;
      out.empty = true;
      return out;
    }
    acc = remove_redundant(acc, tol);
  }
  out.set = acc;
  return out;
}

HPolytope remove_redundant(const HPolytope& x, const optim::ToleranceConfig& tol) {
  const int n = x.dim(), m = x.rows();
  std::vector<bool> keep(m, true);
  for (int r = 0; r < m; ++r) {
    if (x.C.row(r).cwiseAbs().maxCoeff() == 0.0) keep[r] = x.d[r] < 0.0;
  }
  for (int r = 0; r < m; ++r) {
    if (!keep[r]) continue;
    std::vector<int> others;
    for (int j = 0; j < m; ++j) {
      if (j != r && keep[j]) others.push_back(j);
    }
    auto lp = optim::LinearProgram::with_variables(n);
    lp.objective = -x.C.row(r).transpose();
    lp.a_ineq.resize(static_cast<int>(others.size()) + 1, n);
    lp.b_ineq.resize(static_cast<int>(others.size()) + 1);
    for (size_t k = 0; k < others.size(); ++k) {
      lp.a_ineq.row(k) = x.C.row(others[k]);
      lp.b_ineq[k] = x.d[others[k]];
    }
    lp.a_ineq.row(others.size()) = x.C.row(r);
    lp.b_ineq[others.size()] = x.d[r] + 1.0;
    const auto rep = optim::solve_lp(lp, tol);
    if (rep.status == optim::SolveStatus::kNumericalFailure) {
      throw std::runtime_error("remove_redundant: LP failure on row " + std::to_string(r) + ": " + rep.message);
    }
    if (rep.optimal() && -rep.objective <= x.d[r] + tol.feas_tol) keep[r] = false;
  }
  HPolytope out;
  const int kept = static_cast<int>(std::count(keep.begin(), keep.end(), true));
  out.C.resize(kept, n);
  out.d.resize(kept);
  for (int r = 0, k = 0; r < m; ++r) {
    if (!keep[r]) continue;
    out.C.row(k) = x.C.row(r);
    out.d[k++] = x.d[r];
  }
  return out;
}

bool contains_point(const HPolytope& x, const Eigen::VectorXd& point, double tol) {
  require_dim(x.dim(), static_cast<int>(point.size()), "contains_point");
  if (x.rows() == 0) return true;
  return ((x.C * point - x.d).array() <= tol).all();
}

bool is_empty(const HPolytope& x, const optim::ToleranceConfig& tol) {
  if (x.rows() == 0) return false;
  auto lp = optim::LinearProgram::with_variables(x.dim());
  lp.a_ineq = x.C;
  lp.b_ineq = x.d;
  const auto rep = optim::solve_lp(lp, tol);
  if (rep.status == optim::SolveStatus::kNumericalFailure) {
    throw std::runtime_error("is_empty: LP failure: " + rep.message);
  }
  return rep.status == optim::SolveStatus::kInfeasible;
}

double chebyshev_radius(const HPolytope& x, double cap) {
  const int n = x.dim();
  auto lp = optim::LinearProgram::with_variables(n + 1);
  lp.objective[n] = -1.0;
  lp.a_ineq.resize(x.rows(), n + 1);
  lp.a_ineq.leftCols(n) = x.C;
  for (int r = 0; r < x.rows(); ++r) lp.a_ineq(r, n) = x.C.row(r).norm();
  lp.b_ineq = x.d;
  lp.lower = Eigen::VectorXd::Constant(n + 1, -kInf);
  lp.upper = Eigen::VectorXd::Constant(n + 1, kInf);
  lp.upper[n] = cap;
  const auto rep = optim::solve_lp(lp);
  if (rep.status == optim::SolveStatus::kInfeasible) return -1.0;
  if (!rep.optimal()) throw std::runtime_error("chebyshev_radius: LP failure: " + rep.message);
  return rep.x[n];
}

bool origin_interior(const HPolytope& x, double margin) {
  return x.rows() == 0 || (x.d.array() >= margin).all();
}

MembershipCertificate member_aggregate(const VAggregate& z, const Eigen::VectorXd& point, double tol) {
  const int n = z.dim();
  require_dim(n, static_cast<int>(point.size()), "member_aggregate");
  int nb = 0;
  for (const auto& b : z.blocks) nb += b.size();
  const int t = nb;

  auto lp = optim::LinearProgram::with_variables(nb + 1);
  lp.objective[t] = 1.0;
  lp.a_ineq = Eigen::MatrixXd::Zero(2 * n, nb + 1);
  lp.b_ineq.resize(2 * n);
  lp.a_eq = Eigen::MatrixXd::Zero(static_cast<int>(z.blocks.size()), nb + 1);
  lp.b_eq = Eigen::VectorXd::Ones(static_cast<int>(z.blocks.size()));
  for (int s = 0, col = 0; s < static_cast<int>(z.blocks.size()); ++s) {
    for (const auto& v : z.blocks[s].vertices) {
      lp.a_ineq.block(0, col, n, 1) = z.sigma * v;
      lp.a_ineq.block(n, col, n, 1) = -z.sigma * v;
      lp.a_eq(s, col) = 1.0;
      ++col;
    }
  }
  lp.a_ineq.col(t).setConstant(-1.0);
  lp.b_ineq.head(n) = point;
  lp.b_ineq.tail(n) = -point;
  lp.lower = Eigen::VectorXd::Zero(nb + 1);

  MembershipCertificate cert;
  auto rep = optim::solve_lp(lp);
  if (!rep.optimal()) throw std::runtime_error("member_aggregate: LP failure: " + rep.message);
  cert.slack = std::max(0.0, rep.objective);
  cert.feasible = cert.slack <= tol;

  Eigen::VectorXd beta = rep.x;
  if (cert.feasible) {
    // Among certificates with the same mismatch, prefer weight on short vertices.
    auto second = lp;
    second.upper = Eigen::VectorXd::Constant(nb + 1, kInf);
    second.upper[t] = cert.slack + 1e-12;
    for (int s = 0, col = 0; s < static_cast<int>(z.blocks.size()); ++s) {
      for (const auto& v : z.blocks[s].vertices) second.objective[col++] = v.lpNorm<1>();
    }
    second.objective[t] = 0.0;
    const auto rep2 = optim::solve_lp(second);
    if (rep2.optimal()) beta = rep2.x;
  }
  for (int s = 0, col = 0; s < static_cast<int>(z.blocks.size()); ++s) {
    const int q = z.blocks[s].size();
    cert.beta.emplace_back(beta.segment(col, q));
    col += q;
  }
  return cert;
}

double support_value(const VPolytope& p, const Eigen::VectorXd& dir) {
  double best = -kInf;
  for (const auto& v : p.vertices) best = std::max(best, dir.dot(v));
  return best;
}

double support_value(const VAggregate& z, const Eigen::VectorXd& dir) {
  double sum = 0.0;
  for (const auto& b : z.blocks) sum += support_value(b, dir);
  return z.sigma * sum;
}

double support_value(const HPolytope& x, const Eigen::VectorXd& dir) {
  require_dim(x.dim(), static_cast<int>(dir.size()), "support_value");
  auto lp = optim::LinearProgram::with_variables(x.dim());
  lp.objective = -dir;
  lp.a_ineq = x.C;
  lp.b_ineq = x.d;
  const auto rep = optim::solve_lp(lp);
  if (rep.status == optim::SolveStatus::kUnbounded) return kInf;
  if (rep.status == optim::SolveStatus::kInfeasible) return -kInf;
  if (!rep.optimal()) throw std::runtime_error("support_value: LP failure: " + rep.message);
  return -rep.objective;
}

void bounding_box(const VPolytope& p, Eigen::VectorXd& lo, Eigen::VectorXd& hi) {
  lo = Eigen::VectorXd::Constant(p.dim(), kInf);
  hi = Eigen::VectorXd::Constant(p.dim(), -kInf);
  for (const auto& v : p.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
}

void bounding_box(const VAggregate& z, Eigen::VectorXd& lo, Eigen::VectorXd& hi) {
  lo = Eigen::VectorXd::Zero(z.dim());
  hi = Eigen::VectorXd::Zero(z.dim());
  for (const auto& b : z.blocks) {
    Eigen::VectorXd l, h;
    bounding_box(b, l, h);
    lo += l;
    hi += h;
  }
  lo *= z.sigma;
  hi *= z.sigma;
}

VPolytope enumerate_vertices(const HPolytope& x, double tol) {
  const int n = x.dim(), m = x.rows();
  if (n < 1 || n > 3) throw std::invalid_argument("enumerate_vertices: only dimensions 1 to 3 are supported");
  std::vector<Eigen::VectorXd> found;
  std::vector<int> idx(n);
  // Iterate over all n-subsets of rows in lexicographic order.
  for (int i = 0; i < n; ++i) idx[i] = i;
  while (m >= n) {
    Eigen::MatrixXd a(n, n);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) {
      a.row(i) = x.C.row(idx[i]);
      b[i] = x.d[idx[i]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (lu.rank() == n) {
      const Eigen::VectorXd v = lu.solve(b);
      const double scale = 1.0 + v.cwiseAbs().maxCoeff();
      if (contains_point(x, v, tol * scale)) {
        const bool dup = std::any_of(found.begin(), found.end(), [&](const Eigen::VectorXd& u) {
          return (u - v).cwiseAbs().maxCoeff() <= tol * scale;
        });
        if (!dup) found.push_back(v);
      }
    }
    int i = n - 1;
    while (i >= 0 && idx[i] == m - n + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < n; ++j) idx[j] = idx[j - 1] + 1;
  }
  if (found.empty()) throw std::invalid_argument("enumerate_vertices: set is empty or unbounded");
  std::sort(found.begin(), found.end(), [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
  });
  return VPolytope(std::move(found));
}

}  // namespace pnpmpc::geom
