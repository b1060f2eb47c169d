#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pnpmpc/geometry/polytope.hpp"
#include "pnpmpc/model/network.hpp"
#include "pnpmpc/rci/rci.hpp"

namespace pnpmpc::ctrl {

enum class CostMode { kQuadratic, kL1 };
enum class Mode { kDecentralized, kDistributed };

/// Terminal ingredients. Custom data is validated, never synthesized. The
/// terminal set is expressed in deviation coordinates x_hat - x_o.
struct TerminalData {
  enum class Kind { kZero, kCustom };
  Kind kind = Kind::kZero;
  Eigen::MatrixXd S;
  Eigen::MatrixXd K_aux;
  geom::HPolytope Xf;
  /// Needed for invariance checks when the state dimension exceeds 3.
  std::optional<geom::VPolytope> Xf_vertices;
};

struct MpcWeights {
  int N = 10;
  /// Empty means identity.
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  CostMode cost = CostMode::kQuadratic;
};

struct ControllerConfig {
  rci::RciConfig rci;
  MpcWeights weights;
  TerminalData terminal;
};

struct TightenedSets {
  bool ok = false;
  geom::HPolytope Xhat;
  geom::HPolytope V;
  std::string reason;
};

/// X (-) Z and U (-) U_z, eroding block by block with pruning in between.
TightenedSets tighten_sets(const geom::HPolytope& x, const geom::HPolytope& u, const rci::RciDesign& d,
                           const optim::ToleranceConfig& tol = {});

struct TubeController {
  model::Subsystem sub;
  rci::RciDesign rci;
  geom::HPolytope Xhat;
  geom::HPolytope V;
  MpcWeights weights;
  TerminalData terminal;

  int id() const { return sub.id; }
};

/// Empty string when the terminal data passes checks (i)-(iv); otherwise the
/// first failing check.
std::string validate_terminal(const TubeController& c);

struct DesignResult {
  bool ok = false;
  TubeController controller;
  std::vector<int> attempted_k;
  std::string reason;
};

/// RCI synthesis, tightening and terminal validation for one subsystem.
DesignResult design_controller(const model::Subsystem& sub, const geom::VAggregate& w, const ControllerConfig& cfg);
DesignResult design_controller(const model::Network& net, int id, const ControllerConfig& cfg);

struct MpcSolution {
  enum class Status { kFeasible, kInfeasible, kSolverFailure };
  Status status = Status::kSolverFailure;
  Eigen::VectorXd v0;
  Eigen::VectorXd xhat0;
  /// Columns k = 0..N and k = 0..N-1.
  Eigen::MatrixXd xhat;
  Eigen::MatrixXd v;
  std::vector<Eigen::VectorXd> beta;
  double objective = 0.0;
  std::string message;

  bool feasible() const { return status == Status::kFeasible; }
};

/// Setpoint (x_o, u_o) for the given load vector.
void setpoint(const model::Subsystem& s, const Eigen::VectorXd& load, Eigen::VectorXd& xo, Eigen::VectorXd& uo);

/// Tube MPC problem at state x. `load` may be empty when the subsystem has no load input.
MpcSolution solve_mpc(const TubeController& c, const Eigen::VectorXd& x, const Eigen::VectorXd& load = {},
                      const optim::ToleranceConfig& tol = {});

struct KappaResult {
  bool ok = false;
  Eigen::VectorXd u;
  double mu = 0.0;
  std::vector<Eigen::VectorXd> beta;
  std::string message;
};

/// Invariance control: smallest scaling mu with z in mu * Z, input from the
/// same convex weights.
KappaResult kappa_bar(const rci::RciDesign& d, const Eigen::VectorXd& z, const optim::ToleranceConfig& tol = {});

struct PredecessorState {
  int id = 0;
  Eigen::MatrixXd A;  // A_ij
  Eigen::VectorXd x;  // x_j(t)
};

/// Predecessor-aware variant: the successor error A z + B u_z + sum A_ij x_j is
/// placed in mu * Z, with u_z + v kept inside U.
KappaResult kappa_bar_dis(const rci::RciDesign& d, const model::Subsystem& sub, const Eigen::VectorXd& z,
                          const Eigen::VectorXd& v, const std::vector<PredecessorState>& preds,
                          const optim::ToleranceConfig& tol = {});

struct StepResult {
  bool feasible = false;
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  Eigen::VectorXd xhat0;
  double mu = 0.0;
  double objective = 0.0;
  /// Distributed mode fell back to the decentralized law.
  bool fell_back = false;
  std::string message;
};

/// u = v(0|t) + kappa(x - x_hat(0|t)); distributed when `preds` is given and
/// sum A_ij x_j is nonzero.
StepResult step_control(const TubeController& c, const Eigen::VectorXd& x, const Eigen::VectorXd& load = {},
                        const std::vector<PredecessorState>* preds = nullptr,
                        const optim::ToleranceConfig& tol = {});

/// Content hash of a designed controller (ids, sets, vertices, weights).
std::uint64_t fingerprint(const TubeController& c);

}  // namespace pnpmpc::ctrl
