#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "pnpmpc/geometry/polytope.hpp"
#include "pnpmpc/model/network.hpp"
#include "pnpmpc/optim/problem.hpp"

namespace pnpmpc::rci {

enum class Objective { kFeasibility, kMinAlpha };

struct RciConfig {
  /// Steps k; 0 picks the controllability index.
  int k = 0;
  /// Inflation radius; <= 0 picks 1% of the smallest W-to-X facet gap.
  double omega = 0.0;
  Objective objective = Objective::kMinAlpha;
  /// Additional attempts with k+1, k+2, ... after an infeasible LP.
  int retries = 3;
  optim::ToleranceConfig tol;
};

/// Thrown by build_z0 when the inflated box does not fit inside X.
struct Z0Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Interval hull of W grown by omega, origin first, then the 2^n corners.
geom::VPolytope build_z0(const geom::VAggregate& w, double omega, const geom::HPolytope& x);

/// Default omega for W inside X; negative when W already touches the boundary of X.
double default_omega(const geom::VAggregate& w, const geom::HPolytope& x);

/// Column offsets of the decision vector theta.
struct ThetaLayout {
  int n = 0, m = 0, k = 0, q = 0, l = 0, g = 0;

  int z(int s, int f) const { return ((s - 1) * q + f) * n; }  // s in 1..k
  int u(int s, int f) const { return k * q * n + (s * q + f) * m; }  // s in 0..k-1
  int rho(int f1, int f2) const { return k * q * (n + m) + f1 * q + f2; }
  int psi(int r, int s) const { return k * q * (n + m) + q * q + r * k + s; }
  int gamma(int r, int s) const { return k * q * (n + m) + q * q + l * k + r * k + s; }
  int alpha() const { return k * q * (n + m) + q * q + l * k + g * k; }
  int size() const { return alpha() + 1; }
};

ThetaLayout theta_layout(const model::Subsystem& sub, int k, int q);

/// Affine constraints whose feasible set is Theta (strict inequalities closed
/// by the strict margin). Vertex 0 of every block is pinned to the origin.
optim::LinearProgram assemble_theta(const model::Subsystem& sub, const geom::VPolytope& z0, int k,
                                    Objective objective, const optim::ToleranceConfig& tol = {});

struct RciDesign {
  int k = 0;
  double alpha = 0.0;
  double omega = 0.0;
  geom::VAggregate W;
  geom::VPolytope z0;
  /// Blocks s = 0..k-1 and the terminal block s = k.
  std::vector<geom::VPolytope> z_blocks;
  std::vector<geom::VPolytope> u_blocks;
  geom::VPolytope z_terminal;
  /// rho(f1, f2) for the terminal inclusion.
  Eigen::MatrixXd rho;
  /// Z and U_z with sigma = 1 / (1 - alpha).
  geom::VAggregate Z;
  geom::VAggregate Uz;
};

struct RciResult {
  bool ok = false;
  RciDesign design;
  std::vector<int> attempted_k;
  std::string reason;
};

/// Algorithm: W from the network, Z0 around it, then the Theta LP with
/// bounded k retries. The inclusions of Z in X and U_z in U are verified before success.
RciResult synthesize_rci(const model::Network& net, int id, const RciConfig& cfg = {});

/// Same with W supplied directly.
RciResult synthesize_rci(const model::Subsystem& sub, const geom::VAggregate& w, const RciConfig& cfg = {});

/// max over Z of c_r'x <= d_r - margin for every row of X, and the same for U_z in U.
bool verify_inclusions(const model::Subsystem& sub, const RciDesign& d, double margin = 1e-9);

}  // namespace pnpmpc::rci
