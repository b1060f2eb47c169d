#pragma once

#include <cstdint>
#include <vector>

#include "pnpmpc/model/network.hpp"

namespace pnpmpc::model {

struct TruckParams {
  double m1 = 2.0;
  double m2 = 4.0;
  double k12 = 0.4;
  double h12 = 0.3;
  double input_gain = 100.0;
  double ts = 0.1;
  double pos_limit = 4.5;
  double vel_limit = 2.0;
  double input_limit = 1.5;
};

/// Continuous-time blocks of one truck: A_ii, A_ij (from the other truck), B_i.
struct ContinuousBlocks {
  Eigen::MatrixXd A;
  Eigen::MatrixXd A_nb;
  Eigen::MatrixXd B;
};
ContinuousBlocks truck_continuous(double mass, const TruckParams& p);

/// Two trucks joined by a spring and a damper; ids 1 and 2.
Network build_truck_network(const TruckParams& p = {});

/// Trucks in a line, ids 1..n; springs[i] and dampers[i] join trucks i+1 and
/// i+2. Uses the limits, gain and sample time of `p`.
Network build_truck_chain(const std::vector<double>& masses, const std::vector<double>& springs,
                          const std::vector<double>& dampers, const TruckParams& p = {});

struct MassArrayParams {
  double mass_min = 5.0;
  double mass_max = 10.0;
  double spring = 0.5;
  double damper = 0.5;
  double input_gain = 100.0;
  double ts = 0.2;
  double pos_limit = 1.5;
  double vel_limit = 0.8;
  double input_limit = 1.5;
};

/// One mass of the grid: state (x, vx, y, vy), input (Fx, Fy). `nx` and `ny`
/// count neighbours along each axis.
Subsystem mass_subsystem(int id, double mass, int nx, int ny, const MassArrayParams& p);
/// Discretized coupling from a horizontal (axis 0) or vertical (axis 1) neighbour.
Eigen::MatrixXd mass_coupling(double mass, int nx, int ny, int axis, const MassArrayParams& p);

/// rows x cols grid, id = r * cols + c + 1, masses drawn from `seed`.
Network build_mass_array(int rows, int cols, std::uint64_t seed, const MassArrayParams& p = {});

/// Pair of masses with fixed 4-decimal matrices for the naive-MPC
/// counterexample; coupling only on the horizontal axis.
Network naive_mass_pair(double input_limit = 1.5);

struct PowerArea {
  int id = 0;
  double two_h = 10.0;   // 2H, inertia
  double damping = 0.8;  // D
  double droop = 0.05;   // R
  double t_turbine = 0.4;
  double t_governor = 0.1;
};

struct TieLine {
  int a = 0;
  int b = 0;
  double gain = 1.0;  // P_ab
};

struct PowerLimits {
  double angle = 0.05;
  double freq = 0.1;
  double mech = 1.0;
  double valve = 1.0;
  double input = 1.0;
};

/// Continuous area model with load as exogenous input; `tie_sum` is the sum of
/// P_ij over the current neighbours.
ContinuousBlocks power_continuous(const PowerArea& a, double tie_sum, Eigen::MatrixXd* load = nullptr);

/// Local discretized area (no couplings); x_o = (0, 0, p, p), u_o = p.
Subsystem power_subsystem(const PowerArea& a, double tie_sum, double ts, const PowerLimits& lim);

/// Areas joined by symmetric tie lines, each area discretized with its
/// predecessor states and its load treated as exogenous inputs.
Network build_power_network(const std::vector<PowerArea>& areas, const std::vector<TieLine>& lines,
                            double ts = 1.0, const PowerLimits& lim = {});

/// Default five-area data; the first four form a chain 1-2-3-4.
std::vector<PowerArea> default_power_areas();
std::vector<TieLine> power_lines_four_area();
/// Four-area chain with area 5 tied to areas 2 and 4.
std::vector<TieLine> power_lines_five_area();

}  // namespace pnpmpc::model
