#pragma once

#include <vector>

#include <Eigen/Core>

#include "pnpmpc/optim/problem.hpp"

namespace pnpmpc::geom {

/// {x : C x <= d}.
struct HPolytope {
  Eigen::MatrixXd C;
  Eigen::VectorXd d;

  HPolytope() = default;
  HPolytope(Eigen::MatrixXd c, Eigen::VectorXd rhs);

  int dim() const { return static_cast<int>(C.cols()); }
  int rows() const { return static_cast<int>(C.rows()); }

  /// Axis-aligned box lo <= x <= hi.
  static HPolytope box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);
  static HPolytope symmetric_box(const Eigen::VectorXd& half_width);

  /// Throws std::invalid_argument on shape mismatch, zero rows or non-finite data.
  void validate() const;
};

/// Convex hull of a vertex list. Duplicate vertices are allowed.
struct VPolytope {
  std::vector<Eigen::VectorXd> vertices;

  VPolytope() = default;
  explicit VPolytope(std::vector<Eigen::VectorXd> v) : vertices(std::move(v)) {}

  int dim() const { return vertices.empty() ? 0 : static_cast<int>(vertices.front().size()); }
  int size() const { return static_cast<int>(vertices.size()); }

  static VPolytope singleton(const Eigen::VectorXd& point);
  void validate() const;
};

/// sigma * (V_1 + V_2 + ... + V_K), kept implicit.
struct VAggregate {
  std::vector<VPolytope> blocks;
  double sigma = 1.0;

  int dim() const { return blocks.empty() ? 0 : blocks.front().dim(); }
  void validate() const;
};

struct ErosionResult {
  HPolytope set;
  bool empty = false;
};

struct MembershipCertificate {
  bool feasible = false;
  /// Smallest infinity-norm mismatch |sigma * sum beta z - x| attainable.
  double slack = 0.0;
  /// beta[s][f]: weight of vertex f in block s.
  std::vector<Eigen::VectorXd> beta;
};

VPolytope linear_image(const Eigen::MatrixXd& a, const VPolytope& p);

/// All pairwise vertex sums. With `reduce`, points that are not extreme are
/// dropped (dimension <= 2 only; otherwise only exact duplicates go).
VPolytope minkowski_sum_v(const VPolytope& p, const VPolytope& q, bool reduce = false);

/// Flattens an aggregate into one vertex cloud (exponential; small cases only).
VPolytope expand_aggregate(const VAggregate& z);

/// {x : C x <= d - beta * ||c_r||_2}.
ErosionResult erode_by_ball(const HPolytope& x, double beta, const optim::ToleranceConfig& tol = {});

/// X (-) sigma * conv(P) by shifting every facet of X once per vertex and
/// pruning redundant rows after each vertex.
ErosionResult erode_by_vpolytope(const HPolytope& x, const VPolytope& p, double sigma,
                                 const optim::ToleranceConfig& tol = {});

/// Drops rows, scanning in ascending order, whose removal does not change the set.
HPolytope remove_redundant(const HPolytope& x, const optim::ToleranceConfig& tol = {});

bool contains_point(const HPolytope& x, const Eigen::VectorXd& point, double tol);
bool is_empty(const HPolytope& x, const optim::ToleranceConfig& tol = {});

/// Radius of the largest Euclidean ball inside X, capped at `cap`; negative
/// when X is empty.
double chebyshev_radius(const HPolytope& x, double cap = 1e6);

/// Every row satisfies C_r * 0 <= d_r - margin.
bool origin_interior(const HPolytope& x, double margin = 1e-9);

MembershipCertificate member_aggregate(const VAggregate& z, const Eigen::VectorXd& point,
                                       double tol = 1e-8);

double support_value(const VPolytope& p, const Eigen::VectorXd& dir);
double support_value(const VAggregate& z, const Eigen::VectorXd& dir);
/// Support of an H-polytope by LP; +inf when unbounded in `dir`.
double support_value(const HPolytope& x, const Eigen::VectorXd& dir);

/// Componentwise bounds of a vertex set or aggregate.
void bounding_box(const VPolytope& p, Eigen::VectorXd& lo, Eigen::VectorXd& hi);
void bounding_box(const VAggregate& z, Eigen::VectorXd& lo, Eigen::VectorXd& hi);

/// Vertex enumeration for dimension <= 3 by intersecting row subsets.
/// Throws std::invalid_argument for higher dimensions.
VPolytope enumerate_vertices(const HPolytope& x, double tol = 1e-9);

}  // namespace pnpmpc::geom
