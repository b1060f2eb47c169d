#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include <Eigen/Core>

#include "pnpmpc/geometry/polytope.hpp"

namespace pnpmpc::model {

/// x+ = A x + B u + sum_j A_ij x_j + L p, with p a known exogenous load.
struct Subsystem {
  int id = 0;
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  geom::HPolytope X;
  geom::HPolytope U;
  /// Explicit vertices of X; required for state dimension > 3.
  std::optional<geom::VPolytope> X_vertices;
  /// Load input matrix (n x p); zero columns when there is no load.
  Eigen::MatrixXd L;
  /// Setpoint as a linear function of the load: x_o = Sx p, u_o = Su p.
  Eigen::MatrixXd setpoint_x;
  Eigen::MatrixXd setpoint_u;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int loads() const { return static_cast<int>(L.cols()); }

  /// Fills empty L / setpoint matrices with zero-column defaults.
  void normalize();
  void validate() const;
};

struct Coupling {
  int from = 0;  // j
  int to = 0;    // i
  Eigen::MatrixXd A;
  /// Tie-line gain for power-exchange metrics; 0 when not applicable.
  double tie_gain = 0.0;
};

class Network {
 public:
  void add_subsystem(Subsystem s);
  void add_coupling(Coupling c);
  /// Removes subsystem `id` and every coupling touching it.
  void remove_subsystem(int id);
  /// Swaps the matrix of an existing coupling (same endpoints and shape).
  void replace_coupling(const Coupling& c);

  bool contains(int id) const { return subsystems_.count(id) > 0; }
  const Subsystem& subsystem(int id) const;
  Subsystem& subsystem(int id);
  const std::map<int, Subsystem>& subsystems() const { return subsystems_; }
  const std::vector<Coupling>& couplings() const { return couplings_; }
  std::vector<int> ids() const;

  /// N_i = {j : A_ij != 0}.
  const std::set<int>& predecessors(int id) const;
  /// S_i = {j : i in N_j}.
  const std::set<int>& successors(int id) const;
  /// A_ij or nullptr.
  const Coupling* coupling(int to, int from) const;

  int total_states() const;
  int total_inputs() const;

  void validate() const;

 private:
  void rebuild_graph();

  std::map<int, Subsystem> subsystems_;
  std::vector<Coupling> couplings_;
  std::map<int, std::set<int>> pred_;
  std::map<int, std::set<int>> succ_;
};

/// Smallest k with rank [B, AB, ..., A^{k-1}B] = n (SVD, relative tolerance).
/// Throws std::domain_error when the pair is not controllable.
int controllability_index(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol = 1e-9);

/// Vertices of X_i: explicit list, else enumeration for dimension <= 3.
geom::VPolytope state_vertices(const Subsystem& s);

/// Vertices of the box |x_k| <= half_k, 2^n of them.
geom::VPolytope box_vertices(const Eigen::VectorXd& half);

/// W_i as the aggregate of A_ij X_j over predecessors; {0} when N_i is empty.
geom::VAggregate disturbance_set(const Network& net, int id);

struct Discretized {
  Eigen::MatrixXd Ad;
  Eigen::MatrixXd Bd;
  Eigen::MatrixXd Ed;
};

/// Zero-order-hold discretization of x' = Ac x + Bc u + Ec e.
Discretized discretize_exact(const Eigen::MatrixXd& ac, const Eigen::MatrixXd& bc, const Eigen::MatrixXd& ec,
                             double ts);

/// FNV-1a 64 over a canonical text rendering (ids, shapes, %.17g values).
std::uint64_t fingerprint(const Network& net);
std::uint64_t fingerprint(const Subsystem& s);

}  // namespace pnpmpc::model
