#include <random>

#include <gtest/gtest.h>

#include "pnpmpc/model/builders.hpp"
#include "pnpmpc/optim/solvers.hpp"
#include "pnpmpc/rci/rci.hpp"
#include "test_oracles.hpp"

using namespace pnpmpc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

model::Subsystem scalar_system(double x_half) {
  model::Subsystem s;
  s.id = 1;
  s.A = MatrixXd::Constant(1, 1, 0.5);
  s.B = MatrixXd::Ones(1, 1);
  s.X = geom::HPolytope::symmetric_box(VectorXd::Constant(1, x_half));
  s.U = geom::HPolytope::symmetric_box(VectorXd::Ones(1));
  s.normalize();
  return s;
}

geom::VPolytope points_1d(std::initializer_list<double> xs) {
  geom::VPolytope p;
  for (double x : xs) p.vertices.push_back(VectorXd::Constant(1, x));
  return p;
}

// u = sigma * sum beta u_bar for a certificate of x in Z.
VectorXd invariance_input(const rci::RciDesign& d, const geom::MembershipCertificate& cert) {
  VectorXd u = VectorXd::Zero(d.Uz.dim());
  for (size_t s = 0; s < d.u_blocks.size(); ++s)
    for (int f = 0; f < d.u_blocks[s].size(); ++f) u += cert.beta[s][f] * d.u_blocks[s].vertices[f];
  return d.Z.sigma * u;
}

// Samples x in Z and w in W; checks A x + B kappa(x) + w stays in Z and the
// input stays in U.
int invariance_failures(const model::Subsystem& sub, const rci::RciDesign& d, int samples, unsigned seed) {
  std::mt19937 rng(seed);
  int failures = 0;
  for (int i = 0; i < samples; ++i) {
    const VectorXd x = pnpmpc::testing::random_aggregate_point(rng, d.Z);
    const auto cert = geom::member_aggregate(d.Z, x, 1e-8);
    if (!cert.feasible) {
      ++failures;
      continue;
    }
    const VectorXd u = invariance_input(d, cert);
    const VectorXd w = pnpmpc::testing::random_aggregate_point(rng, d.W);
    const VectorXd next = sub.A * x + sub.B * u + w;
    if (!geom::member_aggregate(d.Z, next, 1e-6).feasible) ++failures;
    if (!geom::contains_point(sub.U, u, 1e-9)) ++failures;
  }
  return failures;
}

}  // namespace

TEST(BuildZ0, ZeroDisturbance) {
  geom::VAggregate w{{geom::VPolytope::singleton(VectorXd::Zero(2))}, 1.0};
  const auto z0 = rci::build_z0(w, 0.1, geom::HPolytope::symmetric_box(VectorXd::Ones(2)));
  ASSERT_EQ(z0.size(), 5);
  EXPECT_TRUE(z0.vertices[0].isZero(0.0));
  for (int f = 1; f < 5; ++f) EXPECT_NEAR(z0.vertices[f].cwiseAbs().maxCoeff(), 0.1, 1e-15);
}

TEST(BuildZ0, IntervalArithmetic) {
  geom::VAggregate w;
  w.blocks.push_back(geom::VPolytope({VectorXd::Constant(2, 0.2), VectorXd::Constant(2, -0.2),
                                 (VectorXd(2) << 0.2, -0.2).finished()}));
  const auto z0 = rci::build_z0(w, 0.05, geom::HPolytope::symmetric_box(VectorXd::Ones(2)));
  VectorXd lo, hi;
  geom::bounding_box(z0, lo, hi);
  EXPECT_TRUE(hi.isApprox(VectorXd::Constant(2, 0.25)));
  EXPECT_TRUE(lo.isApprox(VectorXd::Constant(2, -0.25)));
  EXPECT_THROW(rci::build_z0(w, 0.9, geom::HPolytope::symmetric_box(VectorXd::Ones(2))), rci::Z0Error);
}

TEST(BuildZ0, TruckVerticesInsideX) {
  const auto net = model::build_truck_network();
  const auto w = model::disturbance_set(net, 2);
  const auto& x = net.subsystem(2).X;
  const auto z0 = rci::build_z0(w, 0.01, x);
  for (const auto& v : z0.vertices) EXPECT_TRUE(((x.C * v - x.d).array() <= -1e-9).all());
  // Box contains W grown by the Euclidean omega-ball: support comparison.
  for (int a = 0; a < 64; ++a) {
    const VectorXd c = (VectorXd(2) << std::cos(a * 0.1), std::sin(a * 0.1)).finished();
    EXPECT_GE(geom::support_value(z0, c) + 1e-12, geom::support_value(w, c) + 0.01 * c.norm());
  }
}

TEST(Theta, VariableCount) {
  const auto net = model::build_truck_network();
  const auto& sub = net.subsystem(1);
  const auto z0 = rci::build_z0(model::disturbance_set(net, 1), 0.01, sub.X);
  for (int k : {2, 3, 5}) {
    const auto lp = rci::assemble_theta(sub, z0, k, rci::Objective::kFeasibility);
    const int q = z0.size(), n = 2, m = 1, l = 2, g = 4;
    EXPECT_EQ(lp.num_variables(), k * q * n + k * q * m + q * q + l * k + g * k + 1);
  }
}

TEST(Theta, ScalarFeasibleByHandConstruction) {
  const auto sub = scalar_system(1.0);
  const auto z0 = points_1d({0.0, 0.15, -0.15});
  for (auto obj : {rci::Objective::kFeasibility, rci::Objective::kMinAlpha}) {
    const auto lp = rci::assemble_theta(sub, z0, 1, obj);
    // The hand point u = -0.5 z0 gives z(1) = 0, rho = 0, alpha = 0.
    const auto t = rci::theta_layout(sub, 1, 3);
    VectorXd theta = VectorXd::Zero(t.size());
    for (int f = 0; f < 3; ++f) theta[t.u(0, f)] = -0.5 * z0.vertices[f][0];
    theta[t.psi(0, 0)] = theta[t.psi(1, 0)] = 0.075;
    theta[t.gamma(0, 0)] = theta[t.gamma(1, 0)] = 0.15;
    EXPECT_LE(optim::primal_violation(lp.a_ineq, lp.b_ineq, lp.a_eq, lp.b_eq, lp.lower, lp.upper, theta), 1e-12);
    const auto rep = optim::solve_lp(lp);
    ASSERT_TRUE(rep.optimal());
    EXPECT_LE(rep.x[t.alpha()], 0.1);
  }
}

TEST(Theta, ScalarInfeasibleWhenZ0LeavesX) {
  const auto sub = scalar_system(1.0);
  const auto lp = rci::assemble_theta(sub, points_1d({0.0, 2.0, -2.0}), 1, rci::Objective::kFeasibility);
  EXPECT_EQ(optim::solve_lp(lp).status, optim::SolveStatus::kInfeasible);
}

TEST(Theta, RejectsBadConfig) {
  const auto sub = scalar_system(1.0);
  EXPECT_THROW(rci::assemble_theta(sub, points_1d({0.0}), 1, rci::Objective::kMinAlpha),
               std::invalid_argument);
  EXPECT_THROW(rci::assemble_theta(sub, points_1d({0.1, 0.0, -0.1}), 1, rci::Objective::kMinAlpha),
               std::invalid_argument);
  EXPECT_THROW(rci::assemble_theta(sub, points_1d({0.0, 0.1, -0.1}), 0, rci::Objective::kMinAlpha),
               std::invalid_argument);
  rci::RciConfig cfg;
  cfg.k = 1;
  const auto net = model::build_truck_network();
  EXPECT_THROW(rci::synthesize_rci(net, 1, cfg), std::invalid_argument);
}

TEST(Synthesize, IsolatedSubsystem) {
  auto net = model::build_mass_array(1, 1, 3);
  const auto res = rci::synthesize_rci(net, 1);
  ASSERT_TRUE(res.ok) << res.reason;
  EXPECT_LT(res.design.alpha, 0.5);
  EXPECT_TRUE(geom::member_aggregate(res.design.Z, VectorXd::Zero(4)).feasible);
}

TEST(Synthesize, TrucksAndInvariance) {
  const auto net = model::build_truck_network();
  for (int id : {1, 2}) {
    const auto res = rci::synthesize_rci(net, id);
    ASSERT_TRUE(res.ok) << "truck " << id << ": " << res.reason;
    const auto& d = res.design;
    EXPECT_TRUE(rci::verify_inclusions(net.subsystem(id), d));
    EXPECT_EQ(invariance_failures(net.subsystem(id), d, 1000, 100 + id), 0);
  }
}

TEST(Synthesize, ChainAndTerminalResiduals) {
  const auto net = model::build_truck_network();
  const auto& sub = net.subsystem(2);
  const auto res = rci::synthesize_rci(net, 2);
  ASSERT_TRUE(res.ok);
  const auto& d = res.design;
  for (int s = 0; s < d.k; ++s) {
    const auto& next = s + 1 < d.k ? d.z_blocks[s + 1] : d.z_terminal;
    for (int f = 0; f < d.z0.size(); ++f) {
      const VectorXd r = next.vertices[f] - sub.A * d.z_blocks[s].vertices[f] - sub.B * d.u_blocks[s].vertices[f];
      EXPECT_LE(r.cwiseAbs().maxCoeff(), 1e-9);
    }
  }
  for (int f1 = 0; f1 < d.z0.size(); ++f1) {
    VectorXd sum = VectorXd::Zero(2);
    for (int f2 = 0; f2 < d.z0.size(); ++f2) sum += d.rho(f1, f2) * d.z0.vertices[f2];
    EXPECT_LE((d.z_terminal.vertices[f1] - sum).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_GE(d.rho.row(f1).minCoeff(), -1e-12);
    EXPECT_LE(d.rho.row(f1).sum(), d.alpha + 1e-9);
  }
  for (int s = 0; s < d.k; ++s) {
    EXPECT_TRUE(d.z_blocks[s].vertices[0].isZero(0.0));
    EXPECT_TRUE(d.u_blocks[s].vertices[0].isZero(0.0));
  }
}

TEST(Synthesize, MinAlphaNotWorseThanFeasibility) {
  std::vector<std::pair<model::Network, int>> cases = {{model::build_truck_network(), 1},
                                                      {model::build_truck_network(), 2},
                                                      {model::build_mass_array(2, 2, 9), 1}};
  for (const auto& [net, id] : cases) {
    rci::RciConfig feas, mina;
    feas.objective = rci::Objective::kFeasibility;
    const auto a = rci::synthesize_rci(net, id, feas);
    const auto b = rci::synthesize_rci(net, id, mina);
    ASSERT_TRUE(a.ok && b.ok);
    EXPECT_LE(b.design.alpha, a.design.alpha + 1e-9);
  }
}

TEST(Synthesize, DisturbanceTooBig) {
  auto sub = scalar_system(1.0);
  geom::VAggregate w{{points_1d({-1.2, 1.2})}, 1.0};
  const auto res = rci::synthesize_rci(sub, w);
  EXPECT_FALSE(res.ok);
  EXPECT_FALSE(res.reason.empty());
  // W inside X but too large for any invariant tube with the given inputs.
  geom::VAggregate w2{{points_1d({-0.9, 0.9})}, 1.0};
  sub.U = geom::HPolytope::symmetric_box(VectorXd::Constant(1, 0.05));
  const auto res2 = rci::synthesize_rci(sub, w2);
  EXPECT_FALSE(res2.ok);
  EXPECT_EQ(res2.attempted_k.size(), 4u);
}

TEST(Synthesize, MassArrayAndPowerDesigns) {
  const auto mass = model::build_mass_array(2, 2, 17);
  for (int id : mass.ids()) {
    const auto res = rci::synthesize_rci(mass, id);
    EXPECT_TRUE(res.ok) << "mass " << id << ": " << res.reason;
    if (res.ok) EXPECT_EQ(invariance_failures(mass.subsystem(id), res.design, 200, id), 0);
  }
  const auto power = model::build_power_network(model::default_power_areas(), model::power_lines_four_area());
  for (int id : power.ids()) {
    const auto res = rci::synthesize_rci(power, id);
    EXPECT_TRUE(res.ok) << "area " << id << ": " << res.reason;
    if (res.ok) EXPECT_EQ(invariance_failures(power.subsystem(id), res.design, 200, id), 0);
  }
}
