// Bounded-variable two-phase primal simplex on a dense tableau.
//
// Rows are equilibrated by their max-abs coefficient. Inequality rows receive
// a slack in [0, inf); rows whose initial residual cannot be absorbed by a
// slack receive an artificial column. Nonbasic variables rest at a finite
// bound or, when free, at zero. Pricing is Dantzig with a switch to Bland's
// rule after a run of degenerate pivots (kept until the phase ends); the ratio test is the Harris
// two-pass variant. The final basic solution and the multipliers are
// recomputed from the original data with an LU factorization of the basis.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/LU>

#include "pnpmpc/optim/solvers.hpp"

namespace pnpmpc::optim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-9;
constexpr double kPriceTol = 1e-9;
constexpr double kHarrisTol = 1e-9;
constexpr int kDegenerateSwitch = 40;
constexpr int kMinReinvertInterval = 100;

enum class State : std::uint8_t { kLower, kUpper, kFree, kBasic, kDead };

class Simplex {
 public:
  Simplex(const LinearProgram& p, const ToleranceConfig& tol) : p_(p), tol_(tol) {}

  SolveReport run();

 private:
  enum class PhaseResult { kOptimal, kUnbounded, kIterationLimit };

  void setup();
  void price_from_scratch();
  int choose_entering() const;
  PhaseResult iterate();
  void pivot(int row, int col);
  void drive_out_artificials();
  /// Rebuilds the tableau, basic values and reduced costs from an LU
  /// factorization of the current basis.
  void reinvert();
  bool refine_and_extract(SolveReport& report);

  bool is_artificial(int j) const { return j >= n_ + mi_; }

  const LinearProgram& p_;
  ToleranceConfig tol_;

  int n_ = 0, mi_ = 0, me_ = 0, m_ = 0, na_ = 0, ncol_ = 0;
  Eigen::VectorXd row_scale_;
  Eigen::MatrixXd original_;  // scaled standard-form matrix [A | slack | art]
  Eigen::VectorXd rhs_;       // scaled rhs
  Eigen::VectorXd work_rhs_;  // rhs_ with inequality rows relaxed slightly against degeneracy
  Eigen::MatrixXd tableau_;   // B^-1 * original_
  Eigen::VectorXd lo_, up_, value_, cost_, reduced_;
  std::vector<State> state_;
  std::vector<int> basis_;
  int iterations_ = 0;
  int iteration_cap_ = 0;
  int degenerate_run_ = 0;
  int since_reinvert_ = 0;
};

void Simplex::setup() {
  n_ = p_.num_variables();
  mi_ = static_cast<int>(p_.a_ineq.rows());
  me_ = static_cast<int>(p_.a_eq.rows());
  m_ = mi_ + me_;
  iteration_cap_ = std::max(100, tol_.iteration_factor * (n_ + m_));

  Eigen::MatrixXd a(m_, n_);
  Eigen::VectorXd b(m_);
  if (mi_ > 0) {
    a.topRows(mi_) = p_.a_ineq;
    b.head(mi_) = p_.b_ineq;
  }
  if (me_ > 0) {
    a.bottomRows(me_) = p_.a_eq;
    b.tail(me_) = p_.b_eq;
  }
  row_scale_ = Eigen::VectorXd::Ones(m_);
  for (int i = 0; i < m_; ++i) {
    const double s = n_ > 0 ? a.row(i).cwiseAbs().maxCoeff() : 0.0;
    if (s > 0.0) row_scale_[i] = s;
    a.row(i) /= row_scale_[i];
    b[i] /= row_scale_[i];
  }

  // Initial nonbasic positions of the structural columns.
  Eigen::VectorXd x0(n_);
  std::vector<State> structural(n_);
  for (int j = 0; j < n_; ++j) {
    const double lo = p_.lower_bound(j);
    const double up = p_.upper_bound(j);
    if (std::isfinite(lo)) {
      x0[j] = lo;
      structural[j] = State::kLower;
    } else if (std::isfinite(up)) {
      x0[j] = up;
      structural[j] = State::kUpper;
    } else {
      x0[j] = 0.0;
      structural[j] = State::kFree;
    }
  }
  // Deterministic relaxation of the inequality rows by 1e-11..1e-10 (scaled
  // units); the final point is recomputed against the exact data.
  rhs_ = b;
  work_rhs_ = b;
  std::uint64_t lcg = 0x9E3779B97F4A7C15ULL;
  for (int i = 0; i < mi_; ++i) {
    lcg = lcg * 6364136223846793005ULL + 1442695040888963407ULL;
    const double u = static_cast<double>(lcg >> 11) * 0x1.0p-53;
    work_rhs_[i] += (1.0 + 9.0 * u) * 1e-11 * std::max(1.0, std::abs(b[i]));
  }
  const Eigen::VectorXd residual = m_ > 0 ? Eigen::VectorXd(work_rhs_ - a * x0) : Eigen::VectorXd();

  // Rows needing an artificial column and its sign.
  std::vector<int> art_row;
  std::vector<double> art_sign;
  for (int i = 0; i < m_; ++i) {
    if (i < mi_ && residual[i] >= 0.0) continue;
    art_row.push_back(i);
    art_sign.push_back(residual[i] >= 0.0 ? 1.0 : -1.0);
  }
  na_ = static_cast<int>(art_row.size());
  ncol_ = n_ + mi_ + na_;

  original_ = Eigen::MatrixXd::Zero(m_, ncol_);
  if (m_ > 0 && n_ > 0) original_.leftCols(n_) = a;
  for (int i = 0; i < mi_; ++i) original_(i, n_ + i) = 1.0;
  for (int k = 0; k < na_; ++k) original_(art_row[k], n_ + mi_ + k) = art_sign[k];

  lo_.resize(ncol_);
  up_.resize(ncol_);
  value_ = Eigen::VectorXd::Zero(ncol_);
  state_.assign(ncol_, State::kLower);
  for (int j = 0; j < n_; ++j) {
    lo_[j] = p_.lower_bound(j);
    up_[j] = p_.upper_bound(j);
    value_[j] = x0[j];
    state_[j] = structural[j];
  }
  for (int j = n_; j < ncol_; ++j) {
    lo_[j] = 0.0;
    up_[j] = kInf;
  }

  basis_.assign(m_, -1);
  tableau_ = original_;
  for (int i = 0; i < mi_; ++i) {
    if (residual[i] >= 0.0) {
      basis_[i] = n_ + i;
      state_[n_ + i] = State::kBasic;
      value_[n_ + i] = residual[i];
    }
  }
  for (int k = 0; k < na_; ++k) {
    const int i = art_row[k];
    const int col = n_ + mi_ + k;
    tableau_.row(i) *= art_sign[k];
    basis_[i] = col;
    state_[col] = State::kBasic;
    value_[col] = std::abs(residual[i]);
  }
}

void Simplex::price_from_scratch() {
  reduced_ = cost_;
  for (int i = 0; i < m_; ++i) {
    const double cb = cost_[basis_[i]];
    if (cb != 0.0) reduced_ -= cb * tableau_.row(i).transpose();
  }
  for (int i = 0; i < m_; ++i) reduced_[basis_[i]] = 0.0;
}

int Simplex::choose_entering() const {
  const bool bland = degenerate_run_ >= kDegenerateSwitch;
  int best = -1;
  double best_score = 0.0;
  for (int j = 0; j < ncol_; ++j) {
    const State s = state_[j];
    if (s == State::kBasic || s == State::kDead) continue;
    if (lo_[j] == up_[j]) continue;
    const double d = reduced_[j];
    double score = 0.0;
    if (s == State::kLower && d < -kPriceTol) score = -d;
    else if (s == State::kUpper && d > kPriceTol) score = d;
    else if (s == State::kFree && std::abs(d) > kPriceTol) score = std::abs(d);
    if (score == 0.0) continue;
    if (bland) return j;
    if (score > best_score) {
      best_score = score;
      best = j;
    }
  }
  return best;
}

void Simplex::pivot(int row, int col) {
  Eigen::VectorXd column = tableau_.col(col);
  const double piv = column[row];
  column[row] = 0.0;
  for (int j = 0; j < ncol_; ++j) {
    if (state_[j] == State::kDead) continue;
    const double t = tableau_(row, j);
    if (t == 0.0) continue;
    const double r = t / piv;
    tableau_.col(j) -= r * column;
    tableau_(row, j) = r;
  }
  const double dq = reduced_[col];
  if (dq != 0.0) {
    for (int j = 0; j < ncol_; ++j) {
      const double r = tableau_(row, j);
      if (r != 0.0) reduced_[j] -= dq * r;
    }
  }
  reduced_[col] = 0.0;
  basis_[row] = col;
  state_[col] = State::kBasic;
}

void Simplex::reinvert() {
  since_reinvert_ = 0;
  if (m_ == 0) return;
  Eigen::MatrixXd basis_matrix(m_, m_);
  for (int i = 0; i < m_; ++i) basis_matrix.col(i) = original_.col(basis_[i]);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis_matrix);
  Eigen::MatrixXd tab = lu.solve(original_);
  Eigen::VectorXd rhs = work_rhs_;
  std::vector<bool> in_basis(ncol_, false);
  for (int i = 0; i < m_; ++i) in_basis[basis_[i]] = true;
  for (int j = 0; j < ncol_; ++j) {
    if (!in_basis[j] && state_[j] != State::kDead && value_[j] != 0.0) rhs -= value_[j] * original_.col(j);
  }
  const Eigen::VectorXd xb = lu.solve(rhs);
  // A nearly singular basis gives garbage; keep the updated tableau then.
  const double drift = (basis_matrix * tab.leftCols(1) - original_.leftCols(1)).cwiseAbs().maxCoeff();
  if (!tab.allFinite() || !xb.allFinite() || drift > 1e-6) return;
  tableau_ = std::move(tab);
  for (int i = 0; i < m_; ++i) value_[basis_[i]] = xb[i];
  price_from_scratch();
}

Simplex::PhaseResult Simplex::iterate() {
  const int interval = std::max(kMinReinvertInterval, m_);
  while (true) {
    if (iterations_ >= iteration_cap_) return PhaseResult::kIterationLimit;
    if (since_reinvert_ >= interval) reinvert();
    int q = choose_entering();
    if (q < 0 && since_reinvert_ > 0) {
      reinvert();
      q = choose_entering();
    }
    if (q < 0) return PhaseResult::kOptimal;
    ++iterations_;
    ++since_reinvert_;

    const double dir = reduced_[q] < 0.0 ? 1.0 : -1.0;
    const bool bland = degenerate_run_ >= kDegenerateSwitch;

    // Harris pass 1: largest step with bounds relaxed by kHarrisTol. Under
    // Bland's rule the plain minimum ratio is used so the anti-cycling
    // guarantee holds.
    const double harris = bland ? 0.0 : kHarrisTol;
    double relaxed = kInf;
    for (int i = 0; i < m_; ++i) {
      const double rate = dir * tableau_(i, q);
      const int b = basis_[i];
      if (rate > kPivotTol && std::isfinite(lo_[b])) {
        relaxed = std::min(relaxed, (std::max(0.0, value_[b] - lo_[b]) + harris) / rate);
      } else if (rate < -kPivotTol && std::isfinite(up_[b])) {
        relaxed = std::min(relaxed, (std::max(0.0, up_[b] - value_[b]) + harris) / -rate);
      }
    }
    // Pass 2: among rows within the relaxed step, take the largest pivot.
    int leave = -1;
    double step = kInf;
    double best_rate = 0.0;
    bool to_upper = false;
    if (std::isfinite(relaxed)) {
      for (int i = 0; i < m_; ++i) {
        const double rate = dir * tableau_(i, q);
        const int b = basis_[i];
        double ratio = kInf;
        bool hits_upper = false;
        if (rate > kPivotTol && std::isfinite(lo_[b])) {
          ratio = std::max(0.0, value_[b] - lo_[b]) / rate;
        } else if (rate < -kPivotTol && std::isfinite(up_[b])) {
          ratio = std::max(0.0, up_[b] - value_[b]) / -rate;
          hits_upper = true;
        } else {
          continue;
        }
        if (ratio > relaxed * (1.0 + 1e-12) + (bland ? 1e-15 : 0.0)) continue;
        const bool better = bland ? (leave < 0 || basis_[i] < basis_[leave])
                                  : std::abs(rate) > best_rate;
        if (better) {
          leave = i;
          best_rate = std::abs(rate);
          step = std::max(0.0, ratio);
          to_upper = hits_upper;
        }
      }
    }

    const double range = up_[q] - lo_[q];
    const bool flip = std::isfinite(range) && range <= step;
    if (flip) step = range;
    if (!std::isfinite(step)) return PhaseResult::kUnbounded;

    // Once Bland's rule kicks in it stays on for the rest of the phase.
    if (!bland) degenerate_run_ = step <= 1e-12 ? degenerate_run_ + 1 : 0;

    if (step != 0.0) {
      value_[q] += dir * step;
      for (int i = 0; i < m_; ++i) {
        const double a = tableau_(i, q);
        if (a != 0.0) value_[basis_[i]] -= dir * step * a;
      }
    }

    if (flip) {
      state_[q] = dir > 0 ? State::kUpper : State::kLower;
      value_[q] = dir > 0 ? up_[q] : lo_[q];
      continue;
    }

    const int leaving = basis_[leave];
    pivot(leave, q);
    if (to_upper) {
      state_[leaving] = State::kUpper;
      value_[leaving] = up_[leaving];
    } else {
      state_[leaving] = State::kLower;
      value_[leaving] = lo_[leaving];
    }
    if (is_artificial(leaving) && lo_[leaving] == up_[leaving]) state_[leaving] = State::kDead;
  }
}

void Simplex::drive_out_artificials() {
  for (int i = 0; i < m_; ++i) {
    if (!is_artificial(basis_[i])) continue;
    int best = -1;
    double best_abs = 1e-7;
    for (int j = 0; j < n_ + mi_; ++j) {
      if (state_[j] == State::kBasic) continue;
      const double t = std::abs(tableau_(i, j));
      if (t > best_abs) {
        best_abs = t;
        best = j;
      }
    }
    if (best < 0) continue;  // redundant row; the artificial stays basic at zero
    const int art = basis_[i];
    pivot(i, best);
    value_[art] = 0.0;
    state_[art] = State::kDead;
  }
}

bool Simplex::refine_and_extract(SolveReport& report) {
  Eigen::VectorXd x_full = value_;
  for (int j = 0; j < ncol_; ++j) {
    if (state_[j] == State::kDead) x_full[j] = 0.0;
  }
  if (m_ > 0) {
    Eigen::MatrixXd basis_matrix(m_, m_);
    Eigen::VectorXd rhs = rhs_;
    std::vector<bool> in_basis(ncol_, false);
    for (int i = 0; i < m_; ++i) {
      basis_matrix.col(i) = original_.col(basis_[i]);
      in_basis[basis_[i]] = true;
    }
    for (int j = 0; j < ncol_; ++j) {
      if (!in_basis[j] && x_full[j] != 0.0) rhs -= x_full[j] * original_.col(j);
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis_matrix);
    const Eigen::VectorXd xb = lu.solve(rhs);
    const Eigen::VectorXd before = x_full;
    for (int i = 0; i < m_; ++i) x_full[basis_[i]] = xb[i];
    const double r_before =
        primal_violation(p_.a_ineq, p_.b_ineq, p_.a_eq, p_.b_eq, p_.lower, p_.upper, before.head(n_));
    const double r_after =
        primal_violation(p_.a_ineq, p_.b_ineq, p_.a_eq, p_.b_eq, p_.lower, p_.upper, x_full.head(n_));
    if (!(r_after <= r_before) || !xb.allFinite()) x_full = before;

    // Multipliers of the scaled rows, then unscaled.
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = is_artificial(basis_[i]) ? 0.0 : cost_[basis_[i]];
    const Eigen::VectorXd pi = lu.transpose().solve(cb);
    Eigen::VectorXd y = -pi.cwiseQuotient(row_scale_);
    report.dual_ineq = y.head(mi_);
    report.dual_eq = y.tail(me_);
    Eigen::VectorXd d = p_.objective;
    if (n_ > 0) d -= original_.leftCols(n_).transpose() * pi;
    report.reduced_costs = d;
  } else {
    report.dual_ineq.resize(0);
    report.dual_eq.resize(0);
    report.reduced_costs = p_.objective;
  }

  report.x = x_full.head(n_);
  // Clamp tiny bound excursions introduced by round-off.
  for (int j = 0; j < n_; ++j) {
    const double lo = p_.lower_bound(j), up = p_.upper_bound(j);
    if (report.x[j] < lo && lo - report.x[j] <= tol_.feas_tol) report.x[j] = lo;
    if (report.x[j] > up && report.x[j] - up <= tol_.feas_tol) report.x[j] = up;
  }
  report.objective = n_ > 0 ? p_.objective.dot(report.x) : 0.0;
  report.primal_residual =
      primal_violation(p_.a_ineq, p_.b_ineq, p_.a_eq, p_.b_eq, p_.lower, p_.upper, report.x);

  double dual_inf = 0.0;
  for (int i = 0; i < report.dual_ineq.size(); ++i) dual_inf = std::max(dual_inf, -report.dual_ineq[i]);
  for (int j = 0; j < n_; ++j) {
    const double d = report.reduced_costs[j];
    const double lo = p_.lower_bound(j), up = p_.upper_bound(j);
    const bool at_lo = std::isfinite(lo) && std::abs(report.x[j] - lo) <= tol_.feas_tol;
    const bool at_up = std::isfinite(up) && std::abs(report.x[j] - up) <= tol_.feas_tol;
    if (d > 0.0 && !at_lo) dual_inf = std::max(dual_inf, d);
    if (d < 0.0 && !at_up) dual_inf = std::max(dual_inf, -d);
  }
  report.dual_residual = dual_inf;
  // Round-off multipliers on sides without a bound are reported as zero.
  for (int j = 0; j < n_; ++j) {
    double& d = report.reduced_costs[j];
    if ((d > 0.0 && !std::isfinite(p_.lower_bound(j))) || (d < 0.0 && !std::isfinite(p_.upper_bound(j)))) d = 0.0;
  }
  report.dual_ineq = report.dual_ineq.cwiseMax(0.0);
  return report.primal_residual <= tol_.feas_tol;
}

SolveReport Simplex::run() {
  SolveReport report;
  setup();

  // Phase 1.
  cost_ = Eigen::VectorXd::Zero(ncol_);
  for (int j = n_ + mi_; j < ncol_; ++j) cost_[j] = 1.0;
  if (na_ > 0) {
    price_from_scratch();
    const PhaseResult r = iterate();
    if (r == PhaseResult::kIterationLimit) {
      report.status = SolveStatus::kNumericalFailure;
      report.message = "iteration limit reached in phase 1";
      report.iterations = iterations_;
      return report;
    }
    double worst = 0.0;
    for (int i = 0; i < m_; ++i) {
      if (is_artificial(basis_[i])) {
        worst = std::max(worst, value_[basis_[i]] * row_scale_[i]);
      }
    }
    if (worst > tol_.feas_tol) {
      report.status = SolveStatus::kInfeasible;
      report.message = "phase 1 optimum has positive infeasibility";
      report.iterations = iterations_;
      report.x = value_.head(n_);
      return report;
    }
    for (int j = n_ + mi_; j < ncol_; ++j) {
      up_[j] = 0.0;
      if (state_[j] != State::kBasic) {
        state_[j] = State::kDead;
        value_[j] = 0.0;
      }
    }
    drive_out_artificials();
  }

  // Phase 2.
  cost_ = Eigen::VectorXd::Zero(ncol_);
  cost_.head(n_) = p_.objective;
  degenerate_run_ = 0;
  price_from_scratch();
  const PhaseResult r = iterate();
  report.iterations = iterations_;
  if (r == PhaseResult::kIterationLimit) {
    report.status = SolveStatus::kNumericalFailure;
    report.message = "iteration limit reached in phase 2";
    return report;
  }
  if (r == PhaseResult::kUnbounded) {
    report.status = SolveStatus::kUnbounded;
    report.message = "objective unbounded below";
    report.x = value_.head(n_);
    return report;
  }
  if (!refine_and_extract(report)) {
    report.status = SolveStatus::kNumericalFailure;
    report.message = "final point violates constraints beyond feas_tol";
    return report;
  }
  report.status = SolveStatus::kOptimal;
  return report;
}

}  // namespace

SolveReport simplex_solve(const LinearProgram& p, const ToleranceConfig& tol) {
  Simplex simplex(p, tol);
  return simplex.run();
}

}  // namespace pnpmpc::optim
