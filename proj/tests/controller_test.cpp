#include <random>

#include <gtest/gtest.h>

#include "pnpmpc/controller/controller.hpp"
#include "pnpmpc/model/builders.hpp"
#include "test_oracles.hpp"

using namespace pnpmpc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ctrl::ControllerConfig truck_config() {
  ctrl::ControllerConfig cfg;
  cfg.weights.N = 20;
  cfg.weights.Q = Eigen::Vector2d(10.0, 1.0).asDiagonal();
  cfg.weights.R = MatrixXd::Ones(1, 1);
  return cfg;
}

struct Trucks {
  model::Network net = model::build_truck_network();
  ctrl::TubeController c1, c2;
  Trucks() {
    auto r1 = ctrl::design_controller(net, 1, truck_config());
    auto r2 = ctrl::design_controller(net, 2, truck_config());
    EXPECT_TRUE(r1.ok) << r1.reason;
    EXPECT_TRUE(r2.ok) << r2.reason;
    c1 = r1.controller;
    c2 = r2.controller;
  }
};

const Trucks& trucks() {
  static const Trucks t;
  return t;
}

model::Subsystem scalar_system() {
  model::Subsystem s;
  s.id = 1;
  s.A = MatrixXd::Constant(1, 1, 0.5);
  s.B = MatrixXd::Ones(1, 1);
  s.X = geom::HPolytope::symmetric_box(VectorXd::Constant(1, 1.0));
  s.U = geom::HPolytope::symmetric_box(VectorXd::Ones(1));
  s.normalize();
  return s;
}

// One block, vertices {0, -0.2, 0.2}, inputs -0.5 z.
rci::RciDesign scalar_design() {
  rci::RciDesign d;
  d.k = 1;
  geom::VPolytope z, u;
  for (double v : {0.0, -0.2, 0.2}) {
    z.vertices.push_back(VectorXd::Constant(1, v));
    u.vertices.push_back(VectorXd::Constant(1, -0.5 * v));
  }
  d.z_blocks = {z};
  d.u_blocks = {u};
  d.Z = {{z}, 1.0};
  d.Uz = {{u}, 1.0};
  d.W = {{geom::VPolytope::singleton(VectorXd::Zero(1))}, 1.0};
  return d;
}

double support_h(const geom::HPolytope& p, const VectorXd& c) { return geom::support_value(p, c); }

}  // namespace

TEST(TightenSets, SingletonZLeavesXUnchanged) {
  auto d = scalar_design();
  d.Z = {{geom::VPolytope::singleton(VectorXd::Zero(2))}, 1.0};
  d.Uz = {{geom::VPolytope::singleton(VectorXd::Zero(1))}, 1.0};
  const auto x = geom::HPolytope::symmetric_box(Eigen::Vector2d(1.0, 2.0));
  const auto u = geom::HPolytope::symmetric_box(VectorXd::Ones(1));
  const auto t = ctrl::tighten_sets(x, u, d);
  ASSERT_TRUE(t.ok) << t.reason;
  for (int r = 0; r < x.rows(); ++r) EXPECT_NEAR(support_h(t.Xhat, x.C.row(r).transpose()), x.d[r], 1e-12);
}

TEST(TightenSets, BoxArithmetic) {
  rci::RciDesign d;
  geom::VPolytope z = model::box_vertices(Eigen::Vector2d(0.2, 0.2));
  z.vertices.insert(z.vertices.begin(), VectorXd::Zero(2));
  d.Z = {{z}, 1.0};
  d.Uz = {{geom::VPolytope::singleton(VectorXd::Zero(1))}, 1.0};
  const auto t = ctrl::tighten_sets(geom::HPolytope::symmetric_box(Eigen::Vector2d(1.0, 1.0)),
                                    geom::HPolytope::symmetric_box(VectorXd::Ones(1)), d);
  ASSERT_TRUE(t.ok);
  for (int i = 0; i < 2; ++i) {
    VectorXd e = VectorXd::Zero(2);
    e[i] = 1.0;
    EXPECT_NEAR(support_h(t.Xhat, e), 0.8, 1e-12);
    EXPECT_NEAR(support_h(t.Xhat, -e), 0.8, 1e-12);
  }
}

TEST(TightenSets, EmptyWhenZTooBig) {
  rci::RciDesign d;
  d.Z = {{model::box_vertices(Eigen::Vector2d(1.2, 0.1))}, 1.0};
  d.Uz = {{geom::VPolytope::singleton(VectorXd::Zero(1))}, 1.0};
  const auto t = ctrl::tighten_sets(geom::HPolytope::symmetric_box(Eigen::Vector2d(1.0, 1.0)),
                                    geom::HPolytope::symmetric_box(VectorXd::Ones(1)), d);
  EXPECT_FALSE(t.ok);
  EXPECT_FALSE(t.reason.empty());
}

TEST(TightenSets, TruckFacetSupport) {
  const auto& t = trucks();
  for (const auto* c : {&t.c1, &t.c2}) {
    const auto& x = c->sub.X;
    for (int r = 0; r < x.rows(); ++r) {
      const VectorXd cr = x.C.row(r).transpose();
      EXPECT_LE(support_h(c->Xhat, cr) + geom::support_value(c->rci.Z, cr), x.d[r] + 1e-8);
    }
    const auto& u = c->sub.U;
    for (int r = 0; r < u.rows(); ++r) {
      const VectorXd cr = u.C.row(r).transpose();
      EXPECT_LE(support_h(c->V, cr) + geom::support_value(c->rci.Uz, cr), u.d[r] + 1e-8);
    }
  }
}

TEST(SolveMpc, OriginGivesZero) {
  const auto& c = trucks().c1;
  const auto sol = ctrl::solve_mpc(c, VectorXd::Zero(2));
  ASSERT_TRUE(sol.feasible());
  EXPECT_EQ(sol.v0, VectorXd::Zero(1));
  EXPECT_EQ(sol.xhat0, VectorXd::Zero(2));
  EXPECT_EQ(sol.objective, 0.0);
}

TEST(SolveMpc, StateInZGivesZeroNominal) {
  const auto& c = trucks().c1;
  std::mt19937 rng(3);
  for (int i = 0; i < 20; ++i) {
    const VectorXd x = pnpmpc::testing::random_aggregate_point(rng, c.rci.Z);
    const auto sol = ctrl::solve_mpc(c, x);
    ASSERT_TRUE(sol.feasible());
    EXPECT_LE(sol.xhat0.cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE(sol.v0.cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE(sol.objective, 1e-9);
  }
}

TEST(SolveMpc, FarStateInfeasible) {
  const auto& c = trucks().c1;
  const auto sol = ctrl::solve_mpc(c, Eigen::Vector2d(10.0, 0.0));
  EXPECT_EQ(sol.status, ctrl::MpcSolution::Status::kInfeasible);
}

TEST(SolveMpc, ConstraintsHoldAtSolution) {
  const auto& c = trucks().c2;
  const auto sol = ctrl::solve_mpc(c, Eigen::Vector2d(3.0, 0.0));
  ASSERT_TRUE(sol.feasible()) << sol.message;
  const double tol = 1e-7;
  for (int k = 0; k < c.weights.N; ++k) {
    EXPECT_TRUE(geom::contains_point(c.Xhat, sol.xhat.col(k), tol));
    EXPECT_TRUE(geom::contains_point(c.V, sol.v.col(k), tol));
    EXPECT_LE((sol.xhat.col(k + 1) - c.sub.A * sol.xhat.col(k) - c.sub.B * sol.v.col(k)).cwiseAbs().maxCoeff(), tol);
  }
  EXPECT_LE(sol.xhat.col(c.weights.N).cwiseAbs().maxCoeff(), tol);
  VectorXd rebuilt = sol.xhat0;
  for (size_t s = 0; s < sol.beta.size(); ++s) {
    EXPECT_NEAR(sol.beta[s].sum(), 1.0, tol);
    for (int f = 0; f < sol.beta[s].size(); ++f)
      rebuilt += c.rci.Z.sigma * sol.beta[s][f] * c.rci.Z.blocks[s].vertices[f];
  }
  EXPECT_LE((rebuilt - Eigen::Vector2d(3.0, 0.0)).cwiseAbs().maxCoeff(), tol);
}

TEST(SolveMpc, L1CostMode) {
  auto cfg = truck_config();
  cfg.weights.cost = ctrl::CostMode::kL1;
  const auto r = ctrl::design_controller(trucks().net, 2, cfg);
  ASSERT_TRUE(r.ok);
  EXPECT_EQ(ctrl::solve_mpc(r.controller, VectorXd::Zero(2)).objective, 0.0);
  const auto sol = ctrl::solve_mpc(r.controller, Eigen::Vector2d(3.0, 0.0));
  ASSERT_TRUE(sol.feasible()) << sol.message;
  EXPECT_GT(sol.objective, 0.0);
  EXPECT_LT(sol.v0[0], 0.0);
}

TEST(KappaBar, ZeroIsExactlyZero) {
  const auto k = ctrl::kappa_bar(trucks().c1.rci, VectorXd::Zero(2));
  ASSERT_TRUE(k.ok);
  EXPECT_EQ(k.mu, 0.0);
  EXPECT_EQ(k.u, VectorXd::Zero(1));
}

TEST(KappaBar, ScalarHandSolution) {
  const auto k = ctrl::kappa_bar(scalar_design(), VectorXd::Constant(1, 0.1));
  ASSERT_TRUE(k.ok);
  EXPECT_NEAR(k.mu, 0.5, 1e-9);
  EXPECT_NEAR(k.u[0], -0.05, 1e-9);
}

TEST(KappaBar, FeasibleOutsideZ) {
  const auto k = ctrl::kappa_bar(trucks().c1.rci, Eigen::Vector2d(40.0, -30.0));
  ASSERT_TRUE(k.ok);
  EXPECT_GT(k.mu, 1.0);
}

// mu*(rho z) = rho mu*(z); rho * kappa(z) is a feasible weight set for rho z
// reaching the scaled optimum.
TEST(KappaBar, HomogeneityProperty) {
  const auto& d = trucks().c1.rci;
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const VectorXd z = Eigen::Vector2d(3.0 * ud(rng), 1.5 * ud(rng));
    const auto base = ctrl::kappa_bar(d, z);
    ASSERT_TRUE(base.ok);
    for (double rho : {0.0, 0.3, 1.0, 2.0}) {
      const auto scaled = ctrl::kappa_bar(d, rho * z);
      ASSERT_TRUE(scaled.ok);
      EXPECT_NEAR(scaled.mu, rho * base.mu, 1e-7);
      VectorXd rebuilt = VectorXd::Zero(2);
      double mass = 0.0;
      for (size_t s = 0; s < base.beta.size(); ++s) {
        for (int f = 0; f < base.beta[s].size(); ++f)
          rebuilt += d.Z.sigma * rho * base.beta[s][f] * d.Z.blocks[s].vertices[f];
        mass = rho * base.beta[s].sum();
        EXPECT_NEAR(mass, rho * base.mu, 1e-7);
      }
      EXPECT_LE((rebuilt - rho * z).cwiseAbs().maxCoeff(), 1e-7);
    }
  }
}

TEST(KappaBarDis, ZeroDataGivesZero) {
  const auto& t = trucks();
  const auto* cp = t.net.coupling(1, 2);
  const auto k = ctrl::kappa_bar_dis(t.c1.rci, t.c1.sub, VectorXd::Zero(2), VectorXd::Zero(1),
                                     {{2, cp->A, VectorXd::Zero(2)}});
  ASSERT_TRUE(k.ok);
  EXPECT_NEAR(k.mu, 0.0, 1e-9);
  EXPECT_LE(k.u.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(KappaBarDis, FeasibleAtDisturbanceVertices) {
  const auto& t = trucks();
  const auto* cp = t.net.coupling(1, 2);
  const auto xv = model::state_vertices(t.net.subsystem(2));
  std::mt19937 rng(5);
  for (const auto& xj : xv.vertices) {
    const VectorXd z = pnpmpc::testing::random_aggregate_point(rng, t.c1.rci.Z);
    const auto k = ctrl::kappa_bar_dis(t.c1.rci, t.c1.sub, z, VectorXd::Zero(1), {{2, cp->A, xj}});
    EXPECT_TRUE(k.ok) << k.message;
    EXPECT_LE(k.mu, 1.0 + 1e-7);
  }
}

TEST(StepControl, OriginGivesZero) {
  const auto s = ctrl::step_control(trucks().c1, VectorXd::Zero(2));
  ASSERT_TRUE(s.feasible);
  EXPECT_EQ(s.u, VectorXd::Zero(1));
}

TEST(StepControl, StateInZUsesInvarianceLaw) {
  const auto& c = trucks().c2;
  std::mt19937 rng(8);
  for (int i = 0; i < 10; ++i) {
    const VectorXd x = pnpmpc::testing::random_aggregate_point(rng, c.rci.Z);
    const auto s = ctrl::step_control(c, x);
    ASSERT_TRUE(s.feasible);
    EXPECT_NEAR(s.u[0], ctrl::kappa_bar(c.rci, x).u[0], 1e-9);
  }
}

TEST(StepControl, InputRowsOverSamples) {
  const auto& t = trucks();
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> px(-4.5, 4.5), vx(-2.0, 2.0);
  int checked = 0;
  for (int i = 0; i < 500; ++i) {
    const auto& c = i % 2 ? t.c1 : t.c2;
    const VectorXd x = Eigen::Vector2d(px(rng), vx(rng));
    const auto s = ctrl::step_control(c, x);
    if (!s.feasible) continue;
    ++checked;
    for (int r = 0; r < c.sub.U.rows(); ++r) EXPECT_LE(c.sub.U.C.row(r).dot(s.u), c.sub.U.d[r] + 1e-8);
  }
  EXPECT_GT(checked, 100);
}

TEST(StepControl, DistributedActsOnNeighbourCoupling) {
  const auto& t = trucks();
  const VectorXd x1 = VectorXd::Zero(2), x2 = Eigen::Vector2d(3.0, 0.0);
  const auto dec = ctrl::step_control(t.c1, x1);
  ASSERT_TRUE(dec.feasible);
  EXPECT_EQ(dec.u[0], 0.0);
  const std::vector<ctrl::PredecessorState> preds{{2, t.net.coupling(1, 2)->A, x2}};
  const auto dis = ctrl::step_control(t.c1, x1, {}, &preds);
  ASSERT_TRUE(dis.feasible);
  EXPECT_FALSE(dis.fell_back);
  // The spring pulls truck 1 toward positive x; the controller pushes back.
  const VectorXd pull = t.net.coupling(1, 2)->A * x2;
  EXPECT_GT(pull[1], 0.0);
  EXPECT_LT(dis.u[0], 0.0);
}

// Closed loop with the true coupling: tube containment, feasibility and cost decrease.
TEST(ClosedLoop, TubeAndCostDecrease) {
  const auto& t = trucks();
  VectorXd x[2] = {VectorXd::Zero(2), Eigen::Vector2d(3.0, 0.0)};
  const ctrl::TubeController* cs[2] = {&t.c1, &t.c2};
  double prev_cost[2] = {-1, -1}, prev_stage[2] = {0, 0};
  for (int step = 0; step < 60; ++step) {
    VectorXd u[2];
    for (int i = 0; i < 2; ++i) {
      const auto sol = ctrl::solve_mpc(*cs[i], x[i]);
      ASSERT_TRUE(sol.feasible()) << "step " << step << " subsystem " << i + 1;
      EXPECT_TRUE(geom::member_aggregate(cs[i]->rci.Z, x[i] - sol.xhat0, 1e-6).feasible);
      if (prev_cost[i] >= 0) EXPECT_LE(sol.objective - prev_cost[i], -prev_stage[i] + 1e-6);
      prev_cost[i] = sol.objective;
      const VectorXd dx = sol.xhat0;
      prev_stage[i] = dx.dot(cs[i]->weights.Q * dx) + sol.v0.dot(cs[i]->weights.R * sol.v0);
      const auto s = ctrl::step_control(*cs[i], x[i]);
      ASSERT_TRUE(s.feasible);
      u[i] = s.u;
      EXPECT_TRUE(geom::contains_point(cs[i]->sub.U, u[i], 1e-8));
    }
    VectorXd next[2];
    for (int i = 0; i < 2; ++i) {
      const int j = 1 - i;
      next[i] = cs[i]->sub.A * x[i] + cs[i]->sub.B * u[i] + t.net.coupling(i + 1, j + 1)->A * x[j];
      EXPECT_TRUE(geom::contains_point(cs[i]->sub.X, next[i], 1e-8));
    }
    x[0] = next[0];
    x[1] = next[1];
  }
  EXPECT_LE(std::max(x[0].cwiseAbs().maxCoeff(), x[1].cwiseAbs().maxCoeff()), 0.05);
}

TEST(Terminal, CustomDataValidated) {
  auto sub = scalar_system();
  ctrl::ControllerConfig cfg;
  cfg.weights.N = 3;
  cfg.terminal.kind = ctrl::TerminalData::Kind::kCustom;
  cfg.terminal.K_aux = MatrixXd::Zero(1, 1);
  cfg.terminal.Xf = geom::HPolytope::symmetric_box(VectorXd::Constant(1, 0.1));
  // 0.25 S - S + 1 <= 0 needs S >= 4/3.
  cfg.terminal.S = MatrixXd::Constant(1, 1, 2.0);
  const geom::VAggregate w{{geom::VPolytope::singleton(VectorXd::Zero(1))}, 1.0};
  auto ok = ctrl::design_controller(sub, w, cfg);
  ASSERT_TRUE(ok.ok) << ok.reason;
  const auto sol = ctrl::solve_mpc(ok.controller, VectorXd::Constant(1, 0.9));
  ASSERT_TRUE(sol.feasible()) << sol.message;
  EXPECT_LE(std::abs(sol.xhat(0, cfg.weights.N)), 0.1 + 1e-8);

  cfg.terminal.S = MatrixXd::Constant(1, 1, 1.0);
  auto bad = ctrl::design_controller(sub, w, cfg);
  EXPECT_FALSE(bad.ok);
  EXPECT_NE(bad.reason.find("(iv)"), std::string::npos);

  cfg.terminal.S = MatrixXd::Constant(1, 1, 2.0);
  cfg.terminal.K_aux = MatrixXd::Constant(1, 1, -2.0);  // A + B K = -1.5 expands the set
  bad = ctrl::design_controller(sub, w, cfg);
  EXPECT_FALSE(bad.ok);
  EXPECT_NE(bad.reason.find("(ii)"), std::string::npos);
}

TEST(Design, RejectsBadWeights) {
  auto cfg = truck_config();
  cfg.weights.N = 0;
  EXPECT_THROW(ctrl::design_controller(trucks().net, 1, cfg), std::invalid_argument);
  cfg = truck_config();
  cfg.weights.R = MatrixXd::Zero(1, 1);
  EXPECT_THROW(ctrl::design_controller(trucks().net, 1, cfg), std::invalid_argument);
}

TEST(Design, FingerprintStable) {
  const auto& t = trucks();
  auto again = ctrl::design_controller(t.net, 1, truck_config());
  ASSERT_TRUE(again.ok);
  EXPECT_EQ(ctrl::fingerprint(again.controller), ctrl::fingerprint(t.c1));
  EXPECT_NE(ctrl::fingerprint(t.c1), ctrl::fingerprint(t.c2));
}
