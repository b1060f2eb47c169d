#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pnpmpc/controller/controller.hpp"
#include "pnpmpc/model/network.hpp"

namespace pnpmpc::sim {

/// Load of subsystem `id` becomes `value` from step `time` on.
struct LoadStep {
  int id = 0;
  int time = 0;
  Eigen::VectorXd value;
};

struct SimConfig {
  int steps = 100;
  ctrl::Mode mode = ctrl::Mode::kDecentralized;
  /// Missing ids start at the origin.
  std::map<int, Eigen::VectorXd> x0;
  std::vector<LoadStep> loads;
  std::uint64_t seed = 0;
  /// Keep going after an infeasible step (with zero input for that subsystem).
  bool record_failure = false;
  int threads = 1;
  double violation_tol = 1e-7;
};

struct StepRecord {
  int t = 0;
  int id = 0;
  Eigen::VectorXd x, u, v, xhat;
  Eigen::VectorXd xo, uo;
  double mu = 0.0;
  double objective = 0.0;
  bool feasible = false;
  bool fell_back = false;
  bool state_violation = false;
  bool input_violation = false;
  double seconds = 0.0;
  std::string message;
};

struct SimTrace {
  std::vector<int> ids;
  /// steps[t][k] belongs to ids[k].
  std::vector<std::vector<StepRecord>> steps;
  std::map<int, Eigen::VectorXd> final_state;
  bool completed = true;
  int failed_step = -1;
  int failed_id = 0;
  std::string message;

  int infeasible_steps() const;
  int violations() const;
};

/// One control evaluation: the decentralized or distributed tube law, or any
/// other local policy. `preds` is null in decentralized mode.
using Policy = std::function<ctrl::StepResult(int id, const Eigen::VectorXd& x, const Eigen::VectorXd& load,
                                              const std::vector<ctrl::PredecessorState>* preds)>;

/// Closed loop x+ = A x + B u + sum A_ij x_j + L load with a generic policy.
SimTrace run_policy(const model::Network& net, const Policy& policy, const SimConfig& cfg);

/// Closed loop with tube controllers; every subsystem needs one.
SimTrace run(const model::Network& net, const std::map<int, ctrl::TubeController>& controllers,
             const SimConfig& cfg);

/// Load of `id` at step `t` under the schedule (zeros before the first step).
Eigen::VectorXd load_at(const model::Subsystem& s, const std::vector<LoadStep>& loads, int t);

/// Plain MPC that ignores coupling: x(k) in X for k = 1..N-1, x(N) = 0.
struct NaiveMpc {
  model::Subsystem sub;
  int N = 20;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
};

NaiveMpc naive_mpc_controller(const model::Subsystem& sub, int N = 20, Eigen::MatrixXd Q = {},
                              Eigen::MatrixXd R = {});

/// Infeasible when the QP has no solution or x itself violates X.
ctrl::StepResult naive_step(const NaiveMpc& c, const Eigen::VectorXd& x, const optim::ToleranceConfig& tol = {});

SimTrace run_naive(const model::Network& net, const std::map<int, NaiveMpc>& controllers, const SimConfig& cfg);

/// Uniform draw in `scale` times the bounding box of X per subsystem, halved
/// until the tube MPC is feasible.
std::map<int, Eigen::VectorXd> perturbed_start(const std::map<int, ctrl::TubeController>& controllers,
                                               std::uint64_t seed, double scale);

/// (1/T) sum_t sum_i |x - x_o|_Q^2 + |u - u_o|_R^2; identity weights where missing.
double eta_index(const SimTrace& trace, const std::map<int, Eigen::MatrixXd>& Q = {},
                 const std::map<int, Eigen::MatrixXd>& R = {});

/// Directed tie line i <- j with gain P_ij.
struct Tie {
  int i = 0;
  int j = 0;
  double gain = 0.0;
};

/// Every coupling with its tie gain; throws when a gain is missing.
std::vector<Tie> ties_of(const model::Network& net);

/// (1/T) sum_t sum_(i,j) |P_ij (theta_i - theta_j)| ts, angle at `angle_index`.
double phi_index(const SimTrace& trace, const std::vector<Tie>& ties, double ts, int angle_index = 0);

/// First step after which max_i |x_i - x_o,i|_inf stays within 5% of its peak;
/// -1 when the trace never settles.
int settling_95(const SimTrace& trace);

/// Largest C_r x - d_r over all states and inputs (negative when strictly inside).
double max_slack(const SimTrace& trace, const model::Network& net);

struct Metrics {
  double eta = 0.0;
  double phi = 0.0;
  int settling_95 = -1;
  double max_slack = 0.0;
};

/// Metrics with the controllers' own Q, R; phi only when ties are given.
Metrics metrics(const SimTrace& trace, const model::Network& net,
                const std::map<int, ctrl::TubeController>& controllers, const std::vector<Tie>& ties = {},
                double ts = 1.0);

/// Columns t, id, x1.., u1.., v1.., xhat1.., mu, feasible; widths follow the
/// largest subsystem and short rows leave trailing cells empty.
void write_csv(const SimTrace& trace, std::ostream& out);

}  // namespace pnpmpc::sim
