#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pnpmpc/controller/controller.hpp"
#include "pnpmpc/model/network.hpp"

namespace pnpmpc::pnp {

/// A network together with its per-subsystem controllers.
struct Deployment {
  model::Network net;
  ctrl::ControllerConfig config;
  /// Per-id settings that replace `config`.
  std::map<int, ctrl::ControllerConfig> overrides;
  std::map<int, ctrl::TubeController> controllers;

  const ctrl::ControllerConfig& config_for(int id) const;
};

struct DesignOutcome {
  int id = 0;
  bool ok = false;
  std::vector<int> attempted_k;
  std::string reason;
  double seconds = 0.0;
};

/// Designs the given ids against `net` with up to `threads` workers. Results
/// come back in the order of `ids` and do not depend on the thread count.
std::vector<std::pair<DesignOutcome, std::optional<ctrl::TubeController>>> design_many(
    const Deployment& dep, const model::Network& net, const std::vector<int>& ids, int threads = 1);

/// Designs every subsystem; controllers are stored only when all succeed.
std::vector<DesignOutcome> design_all(Deployment& dep, int threads = 1);

/// Dynamics that change with the topology: replacement A_jj (and, with exact
/// discretization, B_j and L_j) for retained subsystems and replacement
/// matrices for existing couplings.
struct TopologyUpdate {
  std::map<int, Eigen::MatrixXd> A;
  std::map<int, Eigen::MatrixXd> B;
  std::map<int, Eigen::MatrixXd> L;
  std::vector<model::Coupling> couplings;

  bool empty() const { return A.empty() && B.empty() && L.empty() && couplings.empty(); }
};

enum class Operation { kPlug, kUnplug };
enum class RedesignPolicy { kNone, kPerformance };

struct Transaction {
  Operation op = Operation::kPlug;
  int target = 0;
  std::vector<int> redesign_set;
  std::vector<DesignOutcome> outcomes;
  bool committed = false;
  std::string reason;
};

/// Adds `sub` with couplings that all touch it. The new subsystem is designed
/// first, then its successors and every subsystem touched by `update`. Any
/// failure leaves `dep` untouched.
Transaction plug_in(Deployment& dep, model::Subsystem sub, const std::vector<model::Coupling>& couplings,
                    const TopologyUpdate& update = {}, const std::optional<ctrl::ControllerConfig>& cfg = {},
                    int threads = 1);

/// Removes `id` and its couplings. Subsystems touched by `update` are always
/// redesigned; former successors only under the performance policy.
Transaction unplug(Deployment& dep, int id, RedesignPolicy policy, const TopologyUpdate& update = {},
                   int threads = 1);

}  // namespace pnpmpc::pnp
