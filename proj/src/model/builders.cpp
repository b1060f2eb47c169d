#include "pnpmpc/model/builders.hpp"

#include <random>
#include <stdexcept>

namespace pnpmpc::model {

namespace {

// Integral of exp(A s) over [0, ts], used to discretize exogenous states.
Eigen::MatrixXd zoh_integral(const Eigen::MatrixXd& ac, double ts) {
  const auto n = ac.rows();
  return discretize_exact(ac, Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd(n, 0), ts).Bd;
}

Eigen::MatrixXd spring_block(double k, double h, double mass, double count) {
  Eigen::MatrixXd a(2, 2);
  a << 0.0, 1.0, -count * k / mass, -count * h / mass;
  return a;
}

}  // namespace

ContinuousBlocks truck_continuous(double mass, const TruckParams& p) {
  ContinuousBlocks c;
  c.A = spring_block(p.k12, p.h12, mass, 1.0);
  c.A_nb = Eigen::MatrixXd::Zero(2, 2);
  c.A_nb(1, 0) = p.k12 / mass;
  c.A_nb(1, 1) = p.h12 / mass;
  c.B = Eigen::MatrixXd::Zero(2, 1);
  c.B(1, 0) = p.input_gain / mass;
  return c;
}

Network build_truck_chain(const std::vector<double>& masses, const std::vector<double>& springs,
                          const std::vector<double>& dampers, const TruckParams& p) {
  const size_t n = masses.size();
  if (n == 0 || springs.size() + 1 != n || dampers.size() + 1 != n)
    throw std::invalid_argument("truck chain needs one spring and one damper per adjacent pair");
  for (double v : masses)
    if (!(v > 0)) throw std::invalid_argument("truck masses must be positive");
  for (size_t i = 0; i + 1 < n; ++i)
    if (!(springs[i] > 0) || !(dampers[i] > 0)) throw std::invalid_argument("springs and dampers must be positive");
  if (!(p.ts > 0)) throw std::invalid_argument("sample time must be positive");

  Network net;
  std::vector<Eigen::MatrixXd> integral(n);
  for (size_t i = 0; i < n; ++i) {
    double k = 0.0, h = 0.0;
    if (i > 0) k += springs[i - 1], h += dampers[i - 1];
    if (i + 1 < n) k += springs[i], h += dampers[i];
    Eigen::MatrixXd a = spring_block(k, h, masses[i], 1.0);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2, 1);
    b(1, 0) = p.input_gain / masses[i];
    const auto d = discretize_exact(a, b, Eigen::MatrixXd(2, 0), p.ts);
    integral[i] = zoh_integral(a, p.ts);
    Subsystem s;
    s.id = static_cast<int>(i) + 1;
    s.A = d.Ad;
    s.B = d.Bd;
    s.X = geom::HPolytope::symmetric_box(Eigen::Vector2d(p.pos_limit, p.vel_limit));
    s.U = geom::HPolytope::symmetric_box(Eigen::VectorXd::Constant(1, p.input_limit));
    net.add_subsystem(std::move(s));
  }
  for (size_t i = 0; i + 1 < n; ++i) {
    for (auto [to, from] : {std::pair(i, i + 1), std::pair(i + 1, i)}) {
      Eigen::MatrixXd nb = Eigen::MatrixXd::Zero(2, 2);
      nb(1, 0) = springs[i] / masses[to];
      nb(1, 1) = dampers[i] / masses[to];
      net.add_coupling({static_cast<int>(from) + 1, static_cast<int>(to) + 1, integral[to] * nb});
    }
  }
  return net;
}

Network build_truck_network(const TruckParams& p) {
  if (p.k12 <= 0 || p.h12 <= 0) throw std::invalid_argument("truck parameters must be positive");
  return build_truck_chain({p.m1, p.m2}, {p.k12}, {p.h12}, p);
}

Subsystem mass_subsystem(int id, double mass, int nx, int ny, const MassArrayParams& p) {
  Eigen::MatrixXd ac = Eigen::MatrixXd::Zero(4, 4);
  ac.topLeftCorner(2, 2) = spring_block(p.spring, p.damper, mass, nx);
  ac.bottomRightCorner(2, 2) = spring_block(p.spring, p.damper, mass, ny);
  Eigen::MatrixXd bc = Eigen::MatrixXd::Zero(4, 2);
  bc(1, 0) = p.input_gain / mass;
  bc(3, 1) = p.input_gain / mass;
  const auto d = discretize_exact(ac, bc, Eigen::MatrixXd(4, 0), p.ts);
  Subsystem s;
  s.id = id;
  s.A = d.Ad;
  s.B = d.Bd;
  const Eigen::Vector4d half(p.pos_limit, p.vel_limit, p.pos_limit, p.vel_limit);
  s.X = geom::HPolytope::symmetric_box(half);
  s.X_vertices = box_vertices(half);
  s.U = geom::HPolytope::symmetric_box(Eigen::Vector2d::Constant(p.input_limit));
  return s;
}

Eigen::MatrixXd mass_coupling(double mass, int nx, int ny, int axis, const MassArrayParams& p) {
  Eigen::MatrixXd ac = Eigen::MatrixXd::Zero(4, 4);
  ac.topLeftCorner(2, 2) = spring_block(p.spring, p.damper, mass, nx);
  ac.bottomRightCorner(2, 2) = spring_block(p.spring, p.damper, mass, ny);
  Eigen::MatrixXd nb = Eigen::MatrixXd::Zero(4, 4);
  const int o = 2 * axis;
  nb(o + 1, o) = p.spring / mass;
  nb(o + 1, o + 1) = p.damper / mass;
  return zoh_integral(ac, p.ts) * nb;
}

Network build_mass_array(int rows, int cols, std::uint64_t seed, const MassArrayParams& p) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("mass array needs at least one row and column");
  if (!(p.mass_min > 0 && p.mass_max >= p.mass_min)) throw std::invalid_argument("invalid mass range");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(p.mass_min, p.mass_max);
  std::vector<double> mass(rows * cols);
  for (auto& m : mass) m = ud(rng);

  auto id_of = [cols](int r, int c) { return r * cols + c + 1; };
  auto nx_of = [cols](int c) { return (c > 0) + (c + 1 < cols); };
  auto ny_of = [rows](int r) { return (r > 0) + (r + 1 < rows); };

  Network net;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      net.add_subsystem(mass_subsystem(id_of(r, c), mass[id_of(r, c) - 1], nx_of(c), ny_of(r), p));

  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int i = id_of(r, c);
      const double mi = mass[i - 1];
      const int nx = nx_of(c), ny = ny_of(r);
      const int dr[4] = {0, 0, -1, 1}, dc[4] = {-1, 1, 0, 0};
      for (int k = 0; k < 4; ++k) {
        const int rr = r + dr[k], cc = c + dc[k];
        if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
        net.add_coupling({id_of(rr, cc), i, mass_coupling(mi, nx, ny, k < 2 ? 0 : 1, p)});
      }
    }
  }
  return net;
}

Network naive_mass_pair(double input_limit) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4), b = Eigen::MatrixXd::Zero(4, 2), c = Eigen::MatrixXd::Zero(4, 4);
  a.topLeftCorner(2, 2) << 0.9987, 0.1987, -0.01245, 0.9863;
  a.bottomRightCorner(2, 2) << 0.9987, 0.1987, -0.0125, 0.9863;
  b(0, 0) = b(2, 1) = 0.2497;
  b(1, 0) = b(3, 1) = 2.4909;
  c.topLeftCorner(2, 2) << 0.0012, 0.0012, 0.0124, 0.0124;

  Network net;
  const Eigen::Vector4d half(1.5, 0.8, 1.5, 0.8);
  for (int id : {1, 2}) {
    Subsystem s;
    s.id = id;
    s.A = a;
    s.B = b;
    s.X = geom::HPolytope::symmetric_box(half);
    s.X_vertices = box_vertices(half);
    s.U = geom::HPolytope::symmetric_box(Eigen::Vector2d::Constant(input_limit));
    net.add_subsystem(std::move(s));
  }
  net.add_coupling({2, 1, c});
  net.add_coupling({1, 2, c});
  return net;
}

ContinuousBlocks power_continuous(const PowerArea& a, double tie_sum, Eigen::MatrixXd* load) {
  ContinuousBlocks c;
  c.A = Eigen::MatrixXd::Zero(4, 4);
  c.A(0, 1) = 1.0;
  c.A(1, 0) = -tie_sum / a.two_h;
  c.A(1, 1) = -a.damping / a.two_h;
  c.A(1, 2) = 1.0 / a.two_h;
  c.A(2, 2) = -1.0 / a.t_turbine;
  c.A(2, 3) = 1.0 / a.t_turbine;
  c.A(3, 1) = -1.0 / (a.droop * a.t_governor);
  c.A(3, 3) = -1.0 / a.t_governor;
  // Per unit of P_ij; callers scale by the line gain.
  c.A_nb = Eigen::MatrixXd::Zero(4, 4);
  c.A_nb(1, 0) = 1.0 / a.two_h;
  c.B = Eigen::MatrixXd::Zero(4, 1);
  c.B(3, 0) = 1.0 / a.t_governor;
  if (load) {
    *load = Eigen::MatrixXd::Zero(4, 1);
    (*load)(1, 0) = -1.0 / a.two_h;
  }
  return c;
}

Subsystem power_subsystem(const PowerArea& a, double tie_sum, double ts, const PowerLimits& lim) {
  Eigen::MatrixXd lc;
  const auto c = power_continuous(a, tie_sum, &lc);
  const auto d = discretize_exact(c.A, c.B, lc, ts);
  Subsystem s;
  s.id = a.id;
  s.A = d.Ad;
  s.B = d.Bd;
  s.L = d.Ed;
  const Eigen::Vector4d half(lim.angle, lim.freq, lim.mech, lim.valve);
  s.X = geom::HPolytope::symmetric_box(half);
  s.X_vertices = box_vertices(half);
  s.U = geom::HPolytope::symmetric_box(Eigen::VectorXd::Constant(1, lim.input));
  s.setpoint_x = Eigen::MatrixXd::Zero(4, 1);
  s.setpoint_x(2, 0) = s.setpoint_x(3, 0) = 1.0;
  s.setpoint_u = Eigen::MatrixXd::Ones(1, 1);
  return s;
}

Network build_power_network(const std::vector<PowerArea>& areas, const std::vector<TieLine>& lines, double ts,
                            const PowerLimits& lim) {
  std::map<int, double> tie_sum;
  std::map<int, PowerArea> by_id;
  for (const auto& a : areas) by_id[a.id] = a;
  for (const auto& l : lines) {
    if (!by_id.count(l.a) || !by_id.count(l.b)) throw std::invalid_argument("tie line references unknown area");
    if (l.gain <= 0.0) throw std::invalid_argument("tie-line gain must be positive");
    tie_sum[l.a] += l.gain;
    tie_sum[l.b] += l.gain;
  }
  Network net;
  for (const auto& a : areas) net.add_subsystem(power_subsystem(a, tie_sum[a.id], ts, lim));
  for (const auto& l : lines) {
    for (auto [to, from] : {std::pair(l.a, l.b), std::pair(l.b, l.a)}) {
      const auto c = power_continuous(by_id[to], tie_sum[to]);
      net.add_coupling({from, to, zoh_integral(c.A, ts) * (l.gain * c.A_nb), l.gain});
    }
  }
  return net;
}

std::vector<PowerArea> default_power_areas() {
  return {
      {1, 12.0, 0.70, 0.050, 0.65, 0.10},
      {2, 10.0, 0.90, 0.0625, 0.40, 0.10},
      {3, 8.0, 0.90, 0.080, 0.30, 0.10},
      {4, 8.0, 0.70, 0.080, 0.60, 0.10},
      {5, 10.0, 0.86, 0.050, 0.80, 0.15},
  };
}

std::vector<TieLine> power_lines_four_area() { return {{1, 2, 2.0}, {2, 3, 1.0}, {3, 4, 1.0}}; }

std::vector<TieLine> power_lines_five_area() {
  auto l = power_lines_four_area();
  l.push_back({2, 5, 1.5});
  l.push_back({4, 5, 1.5});
  return l;
}

}  // namespace pnpmpc::model
