#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pnpmpc/geometry/polytope.hpp"
#include "test_oracles.hpp"

namespace {

using namespace pnpmpc::geom;
using namespace pnpmpc::testing;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

VectorXd v2(double a, double b) { return Vector2d(a, b); }

VPolytope unit_square_vertices() { return VPolytope({v2(1, 1), v2(-1, 1), v2(-1, -1), v2(1, -1)}); }
VPolytope cross_polytope_2d() { return VPolytope({v2(1, 0), v2(0, 1), v2(-1, 0), v2(0, -1)}); }

bool same_rows(const HPolytope& a, const HPolytope& b) {
  return a.C.rows() == b.C.rows() && a.C == b.C && a.d == b.d;
}

TEST(LinearImage, IdentityKeepsVertices) {
  const auto p = unit_square_vertices();
  const auto q = linear_image(MatrixXd::Identity(2, 2), p);
  ASSERT_EQ(q.size(), p.size());
  for (int i = 0; i < p.size(); ++i) EXPECT_EQ(q.vertices[i], p.vertices[i]);
}

TEST(LinearImage, ZeroMapCollapsesToOrigin) {
  const auto q = linear_image(MatrixXd::Zero(2, 2), unit_square_vertices());
  for (const auto& v : q.vertices) EXPECT_EQ(v, VectorXd::Zero(2));
}

TEST(LinearImage, DiagonalStretch) {
  MatrixXd a(2, 2);
  a << 2, 0, 0, 1;
  const auto q = linear_image(a, unit_square_vertices());
  for (const auto& v : q.vertices) {
    EXPECT_EQ(std::abs(v[0]), 2.0);
    EXPECT_EQ(std::abs(v[1]), 1.0);
  }
}

TEST(LinearImage, RejectsDimensionMismatch) {
  EXPECT_THROW(linear_image(MatrixXd::Identity(3, 3), unit_square_vertices()), std::invalid_argument);
}

TEST(MinkowskiSumV, SegmentsMakeSquare) {
  const VPolytope a({v2(0, 0), v2(1, 0)}), b({v2(0, 0), v2(0, 1)});
  const auto s = minkowski_sum_v(a, b);
  ASSERT_EQ(s.size(), 4);
  for (const auto& target : {v2(0, 0), v2(1, 0), v2(0, 1), v2(1, 1)}) {
    EXPECT_TRUE(std::any_of(s.vertices.begin(), s.vertices.end(), [&](const VectorXd& v) { return v == target; }));
  }
}

TEST(MinkowskiSumV, OriginIsIdentity) {
  const auto p = unit_square_vertices();
  const auto s = minkowski_sum_v(p, VPolytope::singleton(VectorXd::Zero(2)));
  ASSERT_EQ(s.size(), p.size());
  for (int i = 0; i < p.size(); ++i) EXPECT_EQ(s.vertices[i], p.vertices[i]);
}

TEST(MinkowskiSumV, CrossPolytopeDoubles) {
  const auto c = cross_polytope_2d();
  const auto s = minkowski_sum_v(c, c, true);
  for (int k = 0; k < 16; ++k) {
    const double a = 2.0 * M_PI * k / 16.0;
    const VectorXd dir = v2(std::cos(a), std::sin(a));
    EXPECT_NEAR(support_value(s, dir), 2.0 * support_value(c, dir), 1e-12);
  }
}

TEST(ErodeByBall, UnitBoxHalfRadius) {
  const auto x = HPolytope::symmetric_box(VectorXd::Ones(2));
  const auto r = erode_by_ball(x, 0.5);
  ASSERT_FALSE(r.empty);
  for (int i = 0; i < r.set.rows(); ++i) EXPECT_DOUBLE_EQ(r.set.d[i], 0.5);
}

TEST(ErodeByBall, ZeroRadiusIsIdentity) {
  std::mt19937 rng(1);
  const auto x = random_hpolytope_2d(rng);
  const auto r = erode_by_ball(x, 0.0);
  EXPECT_TRUE(same_rows(r.set, x));
}

TEST(ErodeByBall, TooLargeRadiusIsFlaggedEmpty) {
  const auto r = erode_by_ball(HPolytope::symmetric_box(VectorXd::Ones(2)), 1.5);
  EXPECT_TRUE(r.empty);
}

// Grid-sampling oracle of the erosion definition {x : x + B_beta in X}.
TEST(ErodeByBall, MatchesGridSamplingOracle) {
  std::mt19937 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = random_hpolytope_2d(rng);
    const auto r = erode_by_ball(x, 0.1);
    EXPECT_EQ(ball_erosion_grid_mismatches(x, r.set, 0.1, 100), 0) << "trial " << trial;
  }
}

TEST(ErodeByVPolytope, BoxMinusCrossPolytope) {
  const auto x = HPolytope::symmetric_box(2.0 * VectorXd::Ones(2));
  const auto r = erode_by_vpolytope(x, cross_polytope_2d(), 1.0);
  ASSERT_FALSE(r.empty);
  ASSERT_EQ(r.set.rows(), 4);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(r.set.d[i], 1.0, 1e-15);
}

TEST(ErodeByVPolytope, SingletonOriginIsIdentity) {
  std::mt19937 rng(4);
  const auto x = remove_redundant(random_hpolytope_2d(rng));
  const auto r = erode_by_vpolytope(x, VPolytope::singleton(VectorXd::Zero(2)), 1.0);
  EXPECT_TRUE(same_rows(r.set, x));
}

TEST(ErodeByVPolytope, BoxMinusSmallBox) {
  const auto x = HPolytope::symmetric_box(VectorXd::Ones(2));
  VPolytope small({v2(0.3, 0.3), v2(-0.3, 0.3), v2(-0.3, -0.3), v2(0.3, -0.3)});
  const auto r = erode_by_vpolytope(x, small, 1.0);
  ASSERT_EQ(r.set.rows(), 4);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(r.set.d[i], 0.7, 1e-15);
}

TEST(ErodeByVPolytope, MatchesAllRowsAtOnceOracle) {
  std::mt19937 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_hpolytope_2d(rng);
    const auto p = random_vpolytope_2d(rng, 0.3);
    const double sigma = 1.0 + 0.5 * (trial % 3);
    const auto r = erode_by_vpolytope(x, p, sigma);
    const auto expected = brute_erosion_2d(x, p, sigma);
    if (expected.size() < 3) {
      EXPECT_TRUE(r.empty || chebyshev_radius(r.set) < 1e-9);
      continue;
    }
    ASSERT_FALSE(r.empty);
    const auto got = brute_vertices_2d(r.set.C, r.set.d);
    EXPECT_LE(hausdorff_polygons(got, expected), 1e-6) << "trial " << trial;
  }
}

TEST(ErodeByVPolytope, OversizedSubtrahendIsEmpty) {
  const auto x = HPolytope::symmetric_box(VectorXd::Ones(2));
  VPolytope big({v2(1.5, 0), v2(-1.5, 0)});
  EXPECT_TRUE(erode_by_vpolytope(x, big, 1.0).empty);
}

TEST(RemoveRedundant, DominatedRowDropped) {
  HPolytope x(MatrixXd::Constant(3, 1, 1.0), (VectorXd(3) << 1.0, 2.0, 3.0).finished());
  x.C(2, 0) = -1.0;
  const auto r = remove_redundant(x);
  ASSERT_EQ(r.rows(), 2);
  EXPECT_EQ(r.d[0], 1.0);
  EXPECT_EQ(r.d[1], 3.0);
}

TEST(RemoveRedundant, MinimalBoxUnchanged) {
  const auto x = HPolytope::symmetric_box(VectorXd::Ones(3));
  EXPECT_TRUE(same_rows(remove_redundant(x), x));
}

TEST(RemoveRedundant, FarCutsRemoved) {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI), extra(0.0, 1.0);
  auto x = HPolytope::symmetric_box(VectorXd::Ones(2));
  MatrixXd c(14, 2);
  VectorXd d(14);
  c.topRows(4) = x.C;
  d.head(4) = x.d;
  for (int k = 4; k < 14; ++k) {
    const double a = ang(rng);
    c.row(k) << std::cos(a), std::sin(a);
    // Box support along a unit normal is at most sqrt(2) < 2.
    d[k] = 2.0 + extra(rng);
  }
  const auto r = remove_redundant(HPolytope(c, d));
  EXPECT_TRUE(same_rows(r, x));
}

TEST(ContainsPoint, Examples) {
  const auto x = HPolytope::symmetric_box(VectorXd::Ones(2));
  EXPECT_TRUE(contains_point(x, VectorXd::Zero(2), 0.0));
  EXPECT_TRUE(contains_point(x, v2(1, -1), 1e-9));
  EXPECT_FALSE(contains_point(x, v2(1.001, 0), 1e-6));
  EXPECT_THROW(contains_point(x, VectorXd::Zero(3), 0.0), std::invalid_argument);
}

TEST(MemberAggregate, OriginUsesOriginVertex) {
  VAggregate z;
  z.sigma = 1.25;
  z.blocks = {VPolytope({v2(0, 0), v2(1, 0), v2(-1, 0.5), v2(0, -1)}),
              VPolytope({v2(0, 0), v2(0.3, 0.3), v2(-0.2, 0.1), v2(0.1, -0.4)})};
  const auto cert = member_aggregate(z, VectorXd::Zero(2));
  ASSERT_TRUE(cert.feasible);
  for (const auto& b : cert.beta) {
    EXPECT_NEAR(b[0], 1.0, 1e-12);
    EXPECT_NEAR(b.tail(b.size() - 1).sum(), 0.0, 1e-12);
  }
}

TEST(MemberAggregate, OutsideBoundingBoxIsInfeasible) {
  VAggregate z;
  z.sigma = 2.0;
  z.blocks = {unit_square_vertices(), unit_square_vertices()};
  EXPECT_FALSE(member_aggregate(z, v2(4.01, 0)).feasible);
}

TEST(MemberAggregate, ConstructedCombinationsAreMembers) {
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  VAggregate z;
  z.sigma = 1.7;
  for (int s = 0; s < 3; ++s) {
    VPolytope b;
    b.vertices.push_back(VectorXd::Zero(3));
    for (int f = 0; f < 6; ++f) b.vertices.push_back(VectorXd::NullaryExpr(3, [&] { return ud(rng); }));
    z.blocks.push_back(b);
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const VectorXd x = random_aggregate_point(rng, z);
    const auto cert = member_aggregate(z, x);
    ASSERT_TRUE(cert.feasible) << "trial " << trial << " slack " << cert.slack;
    VectorXd rebuilt = VectorXd::Zero(3);
    for (size_t s = 0; s < z.blocks.size(); ++s) {
      EXPECT_NEAR(cert.beta[s].sum(), 1.0, 1e-9);
      for (int f = 0; f < z.blocks[s].size(); ++f) rebuilt += z.sigma * cert.beta[s][f] * z.blocks[s].vertices[f];
    }
    EXPECT_LE((rebuilt - x).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(SupportValue, Examples) {
  EXPECT_EQ(support_value(unit_square_vertices(), v2(1, 0)), 1.0);
  EXPECT_EQ(support_value(unit_square_vertices(), v2(0, 0)), 0.0);
  VAggregate z;
  z.sigma = 2.0;
  z.blocks = {unit_square_vertices(), unit_square_vertices()};
  EXPECT_EQ(support_value(z, v2(1, 1)), 8.0);
}

TEST(EnumerateVertices, BoxAndTriangle) {
  EXPECT_EQ(enumerate_vertices(HPolytope::symmetric_box(VectorXd::Ones(3))).size(), 8);
  MatrixXd c(3, 2);
  c << -1, 0, 0, -1, 1, 1;
  const auto v = enumerate_vertices(HPolytope(c, (VectorXd(3) << 0, 0, 1).finished()));
  EXPECT_EQ(v.size(), 3);
  EXPECT_THROW(enumerate_vertices(HPolytope::symmetric_box(VectorXd::Ones(4))), std::invalid_argument);
}

// (X (-) P) (+) P is contained in X, checked by support values.
TEST(GeometryProperty, ErosionInflationDuality) {
  std::mt19937 rng(21);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 30; ++trial) {
    const auto x = random_hpolytope_2d(rng);
    const auto p = random_vpolytope_2d(rng, 0.3);
    const auto r = erode_by_vpolytope(x, p, 1.0);
    if (r.empty) continue;
    for (int k = 0; k < 32; ++k) {
      const VectorXd dir = v2(nd(rng), nd(rng));
      EXPECT_LE(support_value(r.set, dir) + support_value(p, dir), support_value(x, dir) + 1e-8);
    }
  }
}

TEST(GeometryProperty, BallErosionRowsStayPositive) {
  std::mt19937 rng(22);
  std::uniform_real_distribution<double> beta_dist(0.0, 0.8);
  for (int trial = 0; trial < 50; ++trial) {
    auto x = random_hpolytope_2d(rng);
    // Origin-normalized form: every rhs equal to one.
    for (int r = 0; r < x.rows(); ++r) {
      x.C.row(r) /= x.d[r];
      x.d[r] = 1.0;
    }
    const double beta = beta_dist(rng);
    const auto e = erode_by_ball(x, beta);
    if (e.empty || !origin_interior(e.set)) continue;
    const auto pruned = remove_redundant(e.set);
    for (int r = 0; r < pruned.rows(); ++r) EXPECT_LT(beta * pruned.C.row(r).norm(), 1.0);
  }
}

TEST(GeometryProperty, RemoveRedundantIdempotent) {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const auto once = remove_redundant(random_hpolytope_2d(rng));
    EXPECT_TRUE(same_rows(remove_redundant(once), once));
  }
}

TEST(GeometryProperty, MembershipAgreesWithExplicitHull) {
  std::mt19937 rng(24);
  std::uniform_real_distribution<double> ud(-2.5, 2.5);
  VAggregate z;
  z.sigma = 1.1;
  z.blocks = {random_vpolytope_2d(rng, 0.8), random_vpolytope_2d(rng, 0.6), random_vpolytope_2d(rng, 0.4)};
  std::vector<VectorXd> cloud = {VectorXd::Zero(2)};
  for (const auto& b : z.blocks) {
    std::vector<VectorXd> next;
    for (const auto& a : cloud) {
      for (const auto& v : b.vertices) next.push_back(a + v);
    }
    cloud = next;
  }
  for (auto& v : cloud) v *= z.sigma;
  const auto hull = gift_wrap(cloud);
  int checked = 0;
  while (checked < 200) {
    const VectorXd x = v2(ud(rng), ud(rng));
    const double dist = signed_distance_to_polygon(hull, x);
    if (std::abs(dist) < 1e-6) continue;
    ++checked;
    EXPECT_EQ(member_aggregate(z, x).feasible, dist < 0.0) << x.transpose();
  }
}

TEST(GeometryProperty, SupportOfSumIsSumOfSupports) {
  std::mt19937 rng(25);
  std::normal_distribution<double> nd;
  const auto p = random_vpolytope_2d(rng, 1.0), q = random_vpolytope_2d(rng, 0.5);
  const auto s = minkowski_sum_v(p, q);
  for (int k = 0; k < 100; ++k) {
    const VectorXd dir = v2(nd(rng), nd(rng));
    EXPECT_NEAR(support_value(s, dir), support_value(p, dir) + support_value(q, dir), 1e-12);
  }
}

}  // namespace
