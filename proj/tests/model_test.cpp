#include <random>

#include <Eigen/LU>
#include <gtest/gtest.h>

#include "pnpmpc/model/builders.hpp"
#include "pnpmpc/model/network.hpp"

using namespace pnpmpc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Plain Taylor series after scaling by 2^-s, then squaring.
MatrixXd taylor_expm(const MatrixXd& a) {
  int s = 0;
  while (a.norm() / std::pow(2.0, s) > 0.05) ++s;
  const MatrixXd b = a / std::pow(2.0, s);
  MatrixXd term = MatrixXd::Identity(a.rows(), a.cols()), sum = term;
  for (int k = 1; k < 30; ++k) {
    term = term * b / k;
    sum += term;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

// Trapezoid-free oracle for the input integral: series sum_k A^k T^{k+1}/(k+1)!.
MatrixXd taylor_gamma(const MatrixXd& a, double t) {
  MatrixXd term = MatrixXd::Identity(a.rows(), a.cols()) * t, sum = term;
  for (int k = 1; k < 60; ++k) {
    term = a * term * t / (k + 1);
    sum += term;
  }
  return sum;
}

int rank_lu(const MatrixXd& m) {
  Eigen::FullPivLU<MatrixXd> lu(m);
  lu.setThreshold(1e-10);
  return static_cast<int>(lu.rank());
}

}  // namespace

TEST(Controllability, DoubleIntegrator) {
  MatrixXd a(2, 2), b(2, 1);
  a << 1, 1, 0, 1;
  b << 0, 1;
  EXPECT_EQ(model::controllability_index(a, b), 2);
}

TEST(Controllability, FullInputAuthority) {
  MatrixXd a = MatrixXd::Random(3, 3);
  EXPECT_EQ(model::controllability_index(a, MatrixXd::Identity(3, 3)), 1);
}

TEST(Controllability, UncontrollableThrows) {
  MatrixXd a = MatrixXd::Identity(2, 2), b(2, 1);
  b << 1, 0;
  EXPECT_THROW(model::controllability_index(a, b), std::domain_error);
}

TEST(Controllability, MatchesRankSweep) {
  std::mt19937 rng(7);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    MatrixXd a(3, 3), b(3, 1 + trial % 2);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = nd(rng);
    for (int i = 0; i < b.size(); ++i) b.data()[i] = nd(rng);
    int expected = -1;
    MatrixXd ctrb(3, 0), blk = b;
    for (int k = 1; k <= 3 && expected < 0; ++k) {
      ctrb.conservativeResize(3, ctrb.cols() + b.cols());
      ctrb.rightCols(b.cols()) = blk;
      blk = a * blk;
      if (rank_lu(ctrb) == 3) expected = k;
    }
    ASSERT_GT(expected, 0);
    EXPECT_EQ(model::controllability_index(a, b), expected);
  }
}

TEST(Discretize, ZeroDynamics) {
  const auto d = model::discretize_exact(MatrixXd::Zero(2, 2), MatrixXd::Identity(2, 2), MatrixXd(2, 0), 0.1);
  EXPECT_TRUE(d.Ad.isApprox(MatrixXd::Identity(2, 2), 1e-12));
  EXPECT_TRUE(d.Bd.isApprox(0.1 * MatrixXd::Identity(2, 2), 1e-12));
}

TEST(Discretize, DoubleIntegratorClosedForm) {
  MatrixXd a(2, 2), b(2, 1);
  a << 0, 1, 0, 0;
  b << 0, 1;
  for (double t : {0.1, 0.5, 2.0}) {
    const auto d = model::discretize_exact(a, b, MatrixXd(2, 0), t);
    MatrixXd ad(2, 2), bd(2, 1);
    ad << 1, t, 0, 1;
    bd << t * t / 2, t;
    EXPECT_LE((d.Ad - ad).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((d.Bd - bd).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Discretize, MatchesSeriesOracle) {
  std::mt19937 rng(3);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    MatrixXd a(4, 4), b(4, 2), e(4, 1);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = nd(rng);
    for (int i = 0; i < b.size(); ++i) b.data()[i] = nd(rng);
    for (int i = 0; i < e.size(); ++i) e.data()[i] = nd(rng);
    const double t = 0.3;
    const auto d = model::discretize_exact(a, b, e, t);
    const MatrixXd g = taylor_gamma(a, t);
    EXPECT_LE((d.Ad - taylor_expm(a * t)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((d.Bd - g * b).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((d.Ed - g * e).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Discretize, Semigroup) {
  std::mt19937 rng(11);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 30; ++trial) {
    MatrixXd a(3, 3), b(3, 1);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = nd(rng);
    for (int i = 0; i < b.size(); ++i) b.data()[i] = nd(rng);
    const double t = 0.05 + 0.01 * trial;
    const auto one = model::discretize_exact(a, b, MatrixXd(3, 0), t);
    const auto two = model::discretize_exact(a, b, MatrixXd(3, 0), 2 * t);
    EXPECT_LE((one.Ad * one.Ad - two.Ad).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((one.Ad * one.Bd + one.Bd - two.Bd).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Discretize, RejectsBadInput) {
  EXPECT_THROW(model::discretize_exact(MatrixXd::Zero(1, 1), MatrixXd::Ones(1, 1), MatrixXd(1, 0), 0.0),
               std::invalid_argument);
  MatrixXd a = MatrixXd::Zero(1, 1);
  a(0, 0) = std::nan("");
  EXPECT_THROW(model::discretize_exact(a, MatrixXd::Ones(1, 1), MatrixXd(1, 0), 0.1), std::invalid_argument);
}

// The reference mass block is reproduced by a mass of about 7.976 with one
// neighbour on the axis.
TEST(Discretize, ReferenceMassBlock) {
  model::MassArrayParams p;
  const auto s = model::mass_subsystem(1, 7.976, 1, 1, p);
  MatrixXd ad(2, 2);
  ad << 0.9987, 0.1987, -0.01245, 0.9863;
  EXPECT_LE((s.A.topLeftCorner(2, 2) - ad).cwiseAbs().maxCoeff(), 1e-4);
  EXPECT_NEAR(s.B(0, 0), 0.2497, 1e-4);
  EXPECT_NEAR(s.B(1, 0), 2.4909, 1e-3);
  const MatrixXd c = model::mass_coupling(7.976, 1, 1, 0, p);
  EXPECT_NEAR(c(0, 0), 0.0012, 1e-4);
  EXPECT_NEAR(c(1, 0), 0.0124, 2e-4);
  EXPECT_TRUE(c.bottomRows(2).isZero(0.0));
}

TEST(Builders, TruckContinuousBlocks) {
  model::TruckParams p;
  const auto c = model::truck_continuous(p.m2, p);
  EXPECT_DOUBLE_EQ(c.A_nb(1, 0), 0.1);
  EXPECT_DOUBLE_EQ(c.A_nb(1, 1), 0.075);
  EXPECT_DOUBLE_EQ(c.B(1, 0), 25.0);
  EXPECT_DOUBLE_EQ(c.A(1, 0), -0.1);
}

TEST(Builders, TruckNetwork) {
  const auto net = model::build_truck_network();
  net.validate();
  EXPECT_EQ(net.predecessors(1), std::set<int>({2}));
  EXPECT_EQ(net.successors(1), std::set<int>({2}));
  // Discretized model with x_j exogenous equals the block of the collective
  // exact discretization to first order; check the full-system oracle.
  model::TruckParams p;
  MatrixXd a(4, 4), b(4, 2);
  a << 0, 1, 0, 0, -0.2, -0.15, 0.2, 0.15, 0, 0, 0, 1, 0.1, 0.075, -0.1, -0.075;
  b << 0, 0, 50, 0, 0, 0, 0, 25;
  const MatrixXd gamma_11 = taylor_gamma(a.topLeftCorner(2, 2), p.ts);
  EXPECT_LE((net.coupling(1, 2)->A - gamma_11 * a.block(0, 2, 2, 2)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((net.subsystem(1).A - taylor_expm(a.topLeftCorner(2, 2) * p.ts)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Builders, MassArraySizes) {
  const auto one = model::build_mass_array(1, 1, 5);
  EXPECT_TRUE(one.couplings().empty());
  EXPECT_TRUE(one.predecessors(1).empty());
  const auto two = model::build_mass_array(2, 2, 5);
  EXPECT_EQ(two.couplings().size(), 8u);
  const auto big = model::build_mass_array(8, 8, 5);
  // 2 * (rows * (cols - 1) + cols * (rows - 1))
  EXPECT_EQ(big.couplings().size(), 2u * (8 * 7 + 8 * 7));
  EXPECT_THROW(model::build_mass_array(0, 3, 1), std::invalid_argument);
}

TEST(Builders, MassArrayAxesAndReproducibility) {
  const auto a = model::build_mass_array(2, 3, 42);
  const auto b = model::build_mass_array(2, 3, 42);
  const auto c = model::build_mass_array(2, 3, 43);
  EXPECT_EQ(model::fingerprint(a), model::fingerprint(b));
  EXPECT_NE(model::fingerprint(a), model::fingerprint(c));
  // 1 -> 2 is horizontal, 1 -> 4 vertical.
  EXPECT_TRUE(a.coupling(2, 1)->A.bottomRows(2).isZero(0.0));
  EXPECT_TRUE(a.coupling(4, 1)->A.topRows(2).isZero(0.0));
  EXPECT_EQ(a.predecessors(5), std::set<int>({2, 4, 6}));
}

TEST(Builders, PowerSetpointIsEquilibrium) {
  const auto net = model::build_power_network(model::default_power_areas(), model::power_lines_five_area());
  net.validate();
  EXPECT_EQ(net.successors(5), std::set<int>({2, 4}));
  EXPECT_EQ(net.successors(4), std::set<int>({3, 5}));
  for (const auto& [id, s] : net.subsystems()) {
    const double load = 0.1 * id;
    const VectorXd xo = s.setpoint_x * VectorXd::Constant(1, load);
    const VectorXd uo = s.setpoint_u * VectorXd::Constant(1, load);
    VectorXd next = s.A * xo + s.B * uo + s.L * VectorXd::Constant(1, load);
    // Neighbour angles are zero at the setpoint, so couplings vanish.
    EXPECT_LE((next - xo).cwiseAbs().maxCoeff(), 1e-12) << "area " << id;
  }
}

TEST(Network, DisturbanceSet) {
  model::Network net;
  for (int id : {1, 2}) {
    model::Subsystem s;
    s.id = id;
    s.A = MatrixXd::Identity(2, 2) * 0.5;
    s.B = MatrixXd::Identity(2, 2);
    s.X = geom::HPolytope::symmetric_box(VectorXd::Ones(2));
    s.U = geom::HPolytope::symmetric_box(VectorXd::Ones(2));
    net.add_subsystem(s);
  }
  auto w = model::disturbance_set(net, 1);
  ASSERT_EQ(w.blocks.size(), 1u);
  EXPECT_EQ(w.blocks[0].size(), 1);
  EXPECT_TRUE(w.blocks[0].vertices[0].isZero(0.0));
  net.add_coupling({2, 1, 0.1 * MatrixXd::Identity(2, 2)});
  w = model::disturbance_set(net, 1);
  VectorXd lo, hi;
  geom::bounding_box(w, lo, hi);
  EXPECT_TRUE(hi.isApprox(VectorXd::Constant(2, 0.1)));
  EXPECT_TRUE(lo.isApprox(VectorXd::Constant(2, -0.1)));
}

TEST(Network, TruckDisturbanceSupport) {
  const auto net = model::build_truck_network();
  const auto w = model::disturbance_set(net, 2);
  const MatrixXd& a21 = net.coupling(2, 1)->A;
  for (const VectorXd& dir : {VectorXd(VectorXd::Unit(2, 0)), VectorXd(VectorXd::Unit(2, 1))}) {
    double best = -1e300;
    for (double s1 : {-4.5, 4.5})
      for (double s2 : {-2.0, 2.0}) best = std::max(best, dir.dot(a21 * Eigen::Vector2d(s1, s2)));
    EXPECT_NEAR(geom::support_value(w, dir), best, 1e-12);
  }
}

TEST(Network, HighDimensionWithoutVerticesFails) {
  auto net = model::build_mass_array(1, 2, 1);
  net.subsystem(1).X_vertices.reset();
  EXPECT_THROW(model::disturbance_set(net, 2), std::invalid_argument);
}

// Random add/remove sequences keep predecessor and successor sets dual.
TEST(Network, GraphDualityUnderMutation) {
  std::mt19937 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    model::Network net;
    std::vector<int> alive;
    for (int step = 0; step < 40; ++step) {
      const int op = rng() % 3;
      if (op == 0 || alive.size() < 2) {
        model::Subsystem s;
        s.id = step + 1;
        s.A = MatrixXd::Identity(1, 1);
        s.B = MatrixXd::Identity(1, 1);
        s.X = geom::HPolytope::symmetric_box(VectorXd::Ones(1));
        s.U = s.X;
        net.add_subsystem(s);
        alive.push_back(s.id);
      } else if (op == 1) {
        const int a = alive[rng() % alive.size()], b = alive[rng() % alive.size()];
        if (a != b && !net.coupling(a, b)) net.add_coupling({b, a, MatrixXd::Constant(1, 1, 0.1)});
      } else {
        const size_t k = rng() % alive.size();
        net.remove_subsystem(alive[k]);
        alive.erase(alive.begin() + k);
      }
      for (int i : alive) {
        for (int j : net.predecessors(i)) EXPECT_TRUE(net.successors(j).count(i));
        for (int j : net.successors(i)) EXPECT_TRUE(net.predecessors(j).count(i));
      }
      for (const auto& c : net.couplings()) EXPECT_TRUE(net.contains(c.from) && net.contains(c.to));
    }
  }
}

TEST(Network, RejectsBadCouplings) {
  auto net = model::build_truck_network();
  EXPECT_THROW(net.add_coupling({1, 1, MatrixXd::Ones(2, 2)}), std::invalid_argument);
  EXPECT_THROW(net.add_coupling({3, 1, MatrixXd::Ones(2, 2)}), std::invalid_argument);
  EXPECT_THROW(net.add_coupling({2, 1, MatrixXd::Ones(2, 2)}), std::invalid_argument);
  EXPECT_THROW(net.remove_subsystem(9), std::invalid_argument);
}
