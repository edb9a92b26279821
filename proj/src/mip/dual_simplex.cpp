#include "dual_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace prodtrans::mip::detail {

namespace {

constexpr double kPrimalTol = 1e-9;
constexpr double kDualTol = 1e-9;
constexpr double kPivotTol = 1e-7;
constexpr double kDropTol = 1e-13;
constexpr int kRefactorInterval = 1500;
constexpr int kStallLimit = 100;
constexpr double kToleratedInfeas = 1e-6;
constexpr double kTinyPivotTol = 1e-11;
constexpr double kInfinityLike = std::numeric_limits<double>::infinity();

double primal_tol(double bound) { return kPrimalTol * std::max(1.0, std::fabs(bound)); }

}  // namespace

DualSimplex::DualSimplex(LpData data)
    : m_(data.rows), n_(data.cols), total_(data.rows + data.cols), columns_(std::move(data.columns)) {
  lower_.resize(static_cast<std::size_t>(total_));
  upper_.resize(static_cast<std::size_t>(total_));
  cost_.assign(static_cast<std::size_t>(total_), 0.0);
  for (int j = 0; j < n_; ++j) {
    if (!std::isfinite(data.col_lower[j]) || !std::isfinite(data.col_upper[j])) {
      throw std::invalid_argument("dual simplex: structural bounds must be finite");
    }
    lower_[j] = data.col_lower[j];
    upper_[j] = data.col_upper[j];
    cost_[j] = data.cost[j];
  }
  // Logicals get finite bounds from the row's activity range so that any
  // nonbasic column can be moved to the bound its reduced cost prefers.
  std::vector<double> act_lo(static_cast<std::size_t>(m_), 0.0);
  std::vector<double> act_hi(static_cast<std::size_t>(m_), 0.0);
  for (int j = 0; j < n_; ++j) {
    for (const auto& [i, a] : columns_[j]) {
      act_lo[i] += a > 0 ? a * lower_[j] : a * upper_[j];
      act_hi[i] += a > 0 ? a * upper_[j] : a * lower_[j];
    }
  }
  for (int i = 0; i < m_; ++i) {
    lower_[n_ + i] = std::isfinite(data.row_lower[i]) ? data.row_lower[i] : act_lo[i] - 1.0;
    upper_[n_ + i] = std::isfinite(data.row_upper[i]) ? data.row_upper[i] : act_hi[i] + 1.0;
  }

  x_.assign(static_cast<std::size_t>(total_), 0.0);
  state_.assign(static_cast<std::size_t>(total_), State::AtLower);
  head_.resize(static_cast<std::size_t>(m_));
  where_.assign(static_cast<std::size_t>(total_), -1);
  for (int j = 0; j < n_; ++j) {
    const bool at_upper = cost_[j] < 0.0;
    state_[j] = at_upper ? State::AtUpper : State::AtLower;
    x_[j] = at_upper ? upper_[j] : lower_[j];
  }
  for (int i = 0; i < m_; ++i) {
    head_[i] = n_ + i;
    where_[n_ + i] = i;
    state_[n_ + i] = State::Basic;
  }
  // B = -I for the all-logical basis, so B^-1 [A | -I] = [-A | I].
  tableau_.assign(static_cast<std::size_t>(m_) * static_cast<std::size_t>(total_), 0.0);
  for (int j = 0; j < n_; ++j) {
    for (const auto& [i, a] : columns_[j]) row(i)[j] -= a;
  }
  for (int i = 0; i < m_; ++i) row(i)[n_ + i] = 1.0;
  recompute_primal();
  recompute_duals();
}

void DualSimplex::set_column_bounds(int col, double lower, double upper) {
  lower_[col] = lower;
  upper_[col] = upper;
  if (state_[col] == State::Basic) return;
  // A previously fixed column may sit on either end; the reduced cost decides.
  if (d_[col] > kDualTol) {
    state_[col] = State::AtLower;
  } else if (d_[col] < -kDualTol) {
    state_[col] = State::AtUpper;
  }
  const double target = state_[col] == State::AtLower ? lower : upper;
  const double delta = target - x_[col];
  if (delta == 0.0) return;
  x_[col] = target;
  for (int i = 0; i < m_; ++i) {
    const double a = row(i)[col];
    if (a != 0.0) x_[head_[i]] -= a * delta;
  }
}

void DualSimplex::recompute_primal() {
  for (int i = 0; i < m_; ++i) {
    const double* r = row(i);
    double v = 0.0;
    for (int j = 0; j < total_; ++j) {
      if (state_[j] != State::Basic && r[j] != 0.0) v -= r[j] * x_[j];
    }
    x_[head_[i]] = v;
  }
}

void DualSimplex::recompute_duals() {
  d_.resize(static_cast<std::size_t>(total_));
  for (int j = 0; j < total_; ++j) d_[j] = state_[j] == State::Basic ? 0.0 : cost_[j];
  for (int i = 0; i < m_; ++i) {
    const double cb = cost_[head_[i]];
    if (cb == 0.0) continue;
    const double* r = row(i);
    for (int j = 0; j < total_; ++j) {
      if (state_[j] != State::Basic && r[j] != 0.0) d_[j] -= cb * r[j];
    }
  }
}

bool DualSimplex::restore_dual_feasibility() {
  // A refactor (rounding noise, or a singular basis swapped for logicals) can
  // leave reduced costs of the wrong sign. Every bound is finite, so moving
  // such a column to its other bound restores dual feasibility; the dual
  // simplex then repairs the primal side.
  bool moved = false;
  for (int j = 0; j < total_; ++j) {
    if (state_[j] == State::Basic || lower_[j] == upper_[j]) continue;
    if (state_[j] == State::AtLower && d_[j] < -kDualTol) {
      state_[j] = State::AtUpper;
      x_[j] = upper_[j];
      moved = true;
    } else if (state_[j] == State::AtUpper && d_[j] > kDualTol) {
      state_[j] = State::AtLower;
      x_[j] = lower_[j];
      moved = true;
    }
  }
  if (moved) recompute_primal();
  return moved;
}

void DualSimplex::refactor() {
  // Rebuild B^-1 [A | -I] for the current basis by Gauss-Jordan elimination.
  std::vector<double> fresh(static_cast<std::size_t>(m_) * static_cast<std::size_t>(total_), 0.0);
  auto at = [&](int i, int j) -> double& {
    return fresh[static_cast<std::size_t>(i) * static_cast<std::size_t>(total_) + static_cast<std::size_t>(j)];
  };
  for (int j = 0; j < n_; ++j) {
    for (const auto& [i, a] : columns_[j]) at(i, j) += a;
  }
  for (int i = 0; i < m_; ++i) at(i, n_ + i) = -1.0;

  std::vector<int> basic_of_row(static_cast<std::size_t>(m_), -1);
  std::vector<char> done(static_cast<std::size_t>(m_), 0);
  std::vector<int> nz;
  nz.reserve(static_cast<std::size_t>(total_));
  auto eliminate = [&](int p, int col) {
    double* pr = &at(p, 0);
    const double inv = 1.0 / pr[col];
    nz.clear();
    for (int j = 0; j < total_; ++j) {
      if (pr[j] != 0.0) {
        pr[j] *= inv;
        nz.push_back(j);
      }
    }
    pr[col] = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == p) continue;
      double* ri = &at(i, 0);
      const double f = ri[col];
      if (f == 0.0) continue;
      for (int j : nz) {
        ri[j] -= f * pr[j];
        if (std::fabs(ri[j]) < kDropTol) ri[j] = 0.0;
      }
      ri[col] = 0.0;
    }
    basic_of_row[p] = col;
    done[p] = 1;
  };

  std::vector<int> rejected;
  for (int k = 0; k < m_; ++k) {
    const int col = head_[k];
    int best = -1;
    double best_abs = 1e-7;
    for (int i = 0; i < m_; ++i) {
      if (done[i]) continue;
      const double a = std::fabs(at(i, col));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (best < 0) {
      rejected.push_back(col);
      continue;
    }
    eliminate(best, col);
  }
  // Singular basis: swap the rejected columns for logicals of uncovered rows.
  for (int col : rejected) {
    where_[col] = -1;
    state_[col] = (cost_[col] < 0.0 && std::isfinite(upper_[col])) || !std::isfinite(lower_[col]) ? State::AtUpper
                                                                                                   : State::AtLower;
    x_[col] = state_[col] == State::AtUpper ? upper_[col] : lower_[col];
  }
  for (int i = 0; i < m_; ++i) {
    if (done[i]) continue;
    int best_col = -1;
    double best_abs = 0.0;
    for (int r = 0; r < m_; ++r) {
      const int logical = n_ + r;
      if (state_[logical] == State::Basic && where_[logical] >= 0) continue;
      const double a = std::fabs(at(i, logical));
      if (a > best_abs) {
        best_abs = a;
        best_col = logical;
      }
    }
    if (best_col < 0) throw std::runtime_error("dual simplex: cannot repair singular basis");
    state_[best_col] = State::Basic;
    where_[best_col] = i;
    eliminate(i, best_col);
  }

  for (int i = 0; i < m_; ++i) {
    head_[i] = basic_of_row[i];
    where_[head_[i]] = i;
    state_[head_[i]] = State::Basic;
  }
  for (int j = 0; j < total_; ++j) {
    if (state_[j] == State::Basic && where_[j] >= 0 && head_[where_[j]] != j) where_[j] = -1;
    if (state_[j] == State::Basic && where_[j] < 0) {
      state_[j] = std::isfinite(lower_[j]) ? State::AtLower : State::AtUpper;
      x_[j] = state_[j] == State::AtLower ? lower_[j] : upper_[j];
    }
  }
  tableau_.swap(fresh);
  pivots_since_refactor_ = 0;
  recompute_primal();
  recompute_duals();
  restore_dual_feasibility();
}

double DualSimplex::primal_residual() const {
  std::vector<double> activity(static_cast<std::size_t>(m_), 0.0);
  for (int j = 0; j < n_; ++j) {
    for (const auto& [i, a] : columns_[j]) activity[i] += a * x_[j];
  }
  double worst = 0.0;
  for (int i = 0; i < m_; ++i) {
    worst = std::max(worst, std::fabs(activity[i] - x_[n_ + i]) / std::max(1.0, std::fabs(x_[n_ + i])));
  }
  return worst;
}

double DualSimplex::tableau_error() const {
  // The tableau must satisfy B * T = [A | -I]; measure the worst deviation.
  std::vector<double> product(static_cast<std::size_t>(m_) * static_cast<std::size_t>(total_), 0.0);
  for (int i = 0; i < m_; ++i) {
    const int b = head_[i];
    const double* r = row(i);
    auto accumulate = [&](int k, double a) {
      double* out = product.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(total_);
      for (int j = 0; j < total_; ++j) {
        if (r[j] != 0.0) out[j] += a * r[j];
      }
    };
    if (b < n_) {
      for (const auto& [k, a] : columns_[b]) accumulate(k, a);
    } else {
      accumulate(b - n_, -1.0);
    }
  }
  for (int j = 0; j < n_; ++j) {
    for (const auto& [k, a] : columns_[j]) product[static_cast<std::size_t>(k) * static_cast<std::size_t>(total_) + j] -= a;
  }
  for (int k = 0; k < m_; ++k) product[static_cast<std::size_t>(k) * static_cast<std::size_t>(total_) + n_ + k] += 1.0;
  double worst = 0.0;
  for (double v : product) worst = std::max(worst, std::fabs(v));
  return worst;
}

int DualSimplex::choose_leaving_row(const std::vector<double>& tolerated) const {
  int best = -1;
  double best_infeas = 0.0;
  for (int i = 0; i < m_; ++i) {
    const int b = head_[i];
    const double v = x_[b];
    double infeas = 0.0;
    if (v < lower_[b] - primal_tol(lower_[b])) {
      infeas = lower_[b] - v;
    } else if (v > upper_[b] + primal_tol(upper_[b])) {
      infeas = v - upper_[b];
    }
    if (infeas > best_infeas && infeas > tolerated[static_cast<std::size_t>(b)]) {
      best_infeas = infeas;
      best = i;
    }
  }
  return best;
}

int DualSimplex::choose_entering_column(int r, bool to_lower, double pivot_tol) const {
  // Leaving to its lower bound means x_B must rise, so the entering column
  // moves in the direction that increases x_B = -sum(alpha_j x_j).
  const double* pr = row(r);
  double theta_max = std::numeric_limits<double>::infinity();
  for (int j = 0; j < total_; ++j) {
    if (state_[j] == State::Basic) continue;
    const double a = pr[j];
    if (std::fabs(a) < pivot_tol) continue;
    if (lower_[j] == upper_[j]) continue;
    const double dir = to_lower ? -a : a;  // sign of the change x_j must make times alpha
    // AtLower columns may only increase, AtUpper only decrease.
    if (state_[j] == State::AtLower && dir <= 0.0) continue;
    if (state_[j] == State::AtUpper && dir >= 0.0) continue;
    const double dj = state_[j] == State::AtLower ? d_[j] : -d_[j];
    theta_max = std::min(theta_max, (std::max(dj, 0.0) + kDualTol) / std::fabs(a));
  }
  if (!std::isfinite(theta_max)) return -1;
  int best = -1;
  double best_abs = 0.0;
  for (int j = 0; j < total_; ++j) {
    if (state_[j] == State::Basic) continue;
    const double a = pr[j];
    if (std::fabs(a) < pivot_tol) continue;
    if (lower_[j] == upper_[j]) continue;
    const double dir = to_lower ? -a : a;
    if (state_[j] == State::AtLower && dir <= 0.0) continue;
    if (state_[j] == State::AtUpper && dir >= 0.0) continue;
    const double dj = state_[j] == State::AtLower ? d_[j] : -d_[j];
    if (std::max(dj, 0.0) / std::fabs(a) <= theta_max && std::fabs(a) > best_abs) {
      best_abs = std::fabs(a);
      best = j;
    }
  }
  return best;
}

double DualSimplex::blocked_reach(int r, bool to_lower) const {
  const double* pr = row(r);
  double reach = 0.0;
  for (int j = 0; j < total_; ++j) {
    if (state_[j] == State::Basic || lower_[j] == upper_[j]) continue;
    const double dir = to_lower ? -pr[j] : pr[j];
    if (state_[j] == State::AtLower && dir <= 0.0) continue;
    if (state_[j] == State::AtUpper && dir >= 0.0) continue;
    reach += std::fabs(pr[j]) * (upper_[j] - lower_[j]);
  }
  return reach;
}

void DualSimplex::pivot(int r, int q, bool to_lower) {
  const int leaving = head_[r];
  double* pr = row(r);
  const double alpha = pr[q];
  const double target = to_lower ? lower_[leaving] : upper_[leaving];

  // Primal step: x_leaving = -sum alpha_j x_j, so it reaches target when x_q moves by delta.
  const double delta = -(target - x_[leaving]) / alpha;
  for (int i = 0; i < m_; ++i) {
    const double a = row(i)[q];
    if (a != 0.0) x_[head_[i]] -= a * delta;
  }
  x_[q] += delta;
  x_[leaving] = target;

  // Dual step.
  const double theta = d_[q] / alpha;
  pivot_nz_.clear();
  for (int j = 0; j < total_; ++j) {
    if (pr[j] != 0.0) pivot_nz_.push_back(j);
  }
  for (int j : pivot_nz_) {
    if (state_[j] != State::Basic) d_[j] -= theta * pr[j];
  }
  d_[q] = 0.0;
  d_[leaving] = -theta;

  // Tableau update.
  const double inv = 1.0 / alpha;
  for (int j : pivot_nz_) pr[j] *= inv;
  pr[q] = 1.0;
  for (int i = 0; i < m_; ++i) {
    if (i == r) continue;
    double* ri = row(i);
    const double f = ri[q];
    if (f == 0.0) continue;
    for (int j : pivot_nz_) {
      ri[j] -= f * pr[j];
      if (std::fabs(ri[j]) < kDropTol) ri[j] = 0.0;
    }
    ri[q] = 0.0;
  }

  head_[r] = q;
  where_[q] = r;
  where_[leaving] = -1;
  state_[q] = State::Basic;
  state_[leaving] = to_lower ? State::AtLower : State::AtUpper;
  ++pivots_since_refactor_;
  ++iterations_;
}

void DualSimplex::perturb() {
  // Dual degeneracy can make the ratio test cycle; small cost shifts in the
  // dual feasible direction make every step strictly improving.
  original_cost_ = cost_;
  for (int j = 0; j < total_; ++j) {
    if (state_[j] == State::Basic || lower_[j] == upper_[j]) continue;
    rng_state_ = rng_state_ * 6364136223846793005ULL + 1442695040888963407ULL;
    const double u = static_cast<double>(rng_state_ >> 11) * 0x1.0p-53;
    const double shift = 5e-7 * (1.0 + std::fabs(cost_[j])) * (1.0 + u);
    cost_[j] += state_[j] == State::AtLower ? shift : -shift;
  }
  perturbed_ = true;
  recompute_duals();
}

double DualSimplex::objective() const {
  double z = 0.0;
  for (int j = 0; j < n_; ++j) z += cost_[j] * x_[j];
  return z;
}

std::vector<double> DualSimplex::column_values() const { return {x_.begin(), x_.begin() + n_}; }

LpStatus DualSimplex::solve(double cutoff, Clock::time_point deadline) {
  const long long limit = iterations_ + 50'000 + 50LL * (m_ + n_);
  int repairs = 0;
  int dual_repairs = 0;
  long long local = 0;
  double best_objective = -std::numeric_limits<double>::infinity();
  int stall = 0;
  std::vector<double> tolerated(static_cast<std::size_t>(total_), 0.0);
  for (;;) {
    if (pivots_since_refactor_ >= kRefactorInterval) refactor();
    if ((++local & 63) == 0 && Clock::now() > deadline) return LpStatus::TimeLimit;
    if (iterations_ > limit) return LpStatus::IterationLimit;

    const int r = choose_leaving_row(tolerated);
    if (r < 0) {
      if (pivots_since_refactor_ > 0 && repairs < 3 && (primal_residual() > 1e-7 || tableau_error() > 1e-7)) {
        ++repairs;
        refactor();
        continue;
      }
      if (perturbed_) {
        cost_ = original_cost_;
        perturbed_ = false;
        stall = 0;
        best_objective = -std::numeric_limits<double>::infinity();
      }
      recompute_duals();
      if (dual_repairs < 20 && restore_dual_feasibility()) {
        ++dual_repairs;
        continue;
      }
      return LpStatus::Optimal;
    }
    // The objective bounds the optimum from below only while the basis is
    // dual feasible, so the early exit re-checks that first.
    if (!perturbed_) {
      const double z = objective();
      if (z > best_objective + 1e-9 * (1.0 + std::fabs(z))) {
        best_objective = z;
        stall = 0;
      } else if (++stall >= kStallLimit) {
        perturb();
      }
    }
    if (!perturbed_ && std::isfinite(cutoff) && (local & 7) == 0 && objective() > cutoff) {
      if (pivots_since_refactor_ > 0 && (primal_residual() > 1e-7 || tableau_error() > 1e-7)) {
        refactor();
        continue;
      }
      recompute_duals();
      if (!restore_dual_feasibility()) return LpStatus::Cutoff;
    }

    const int b = head_[r];
    const bool to_lower = x_[b] < lower_[b];
    const int q = choose_entering_column(r, to_lower, kPivotTol);
    if (q < 0) {
      // The proof below reads the tableau row, so it must come from a fresh factorization.
      if (pivots_since_refactor_ > 0) {
        refactor();
        continue;
      }
      // A violation within tolerance proves nothing. Beyond that, entries
      // below the pivot tolerance can still absorb it, and every tableau
      // entry carries the factorization error, so only a row that cannot
      // reach its bound by more than that error means infeasible.
      const double bound = to_lower ? lower_[b] : upper_[b];
      const double infeas = to_lower ? bound - x_[b] : x_[b] - bound;
      if (infeas <= kToleratedInfeas * std::max(1.0, std::fabs(bound))) {
        tolerated[static_cast<std::size_t>(b)] = 2.0 * infeas;
        continue;
      }
      double magnitude = 1.0;
      for (int j = 0; j < total_; ++j) {
        if (state_[j] != State::Basic) magnitude += std::fabs(x_[j]);
      }
      const double noise = tableau_error() * magnitude;
      if (infeas <= blocked_reach(r, to_lower) + primal_tol(bound)) {
        const int tiny = choose_entering_column(r, to_lower, kTinyPivotTol);
        if (tiny < 0) return LpStatus::Numerical;
        pivot(r, tiny, to_lower);
        refactor();
        continue;
      }
      if (infeas <= blocked_reach(r, to_lower) + primal_tol(bound) + noise) return LpStatus::Numerical;
      return LpStatus::Infeasible;
    }
    pivot(r, q, to_lower);
  }
}

std::vector<Cut> DualSimplex::gomory_cuts(const std::vector<char>& is_integer, int max_cuts) const {
  constexpr double kMinFrac = 0.01;
  constexpr double kMaxDynamism = 1e7;
  std::vector<std::vector<std::pair<int, double>>> row_terms(static_cast<std::size_t>(m_));
  for (int j = 0; j < n_; ++j) {
    for (const auto& [i, a] : columns_[j]) row_terms[i].push_back({j, a});
  }

  std::vector<Cut> cuts;
  std::vector<double> coef(static_cast<std::size_t>(n_));
  for (int i = 0; i < m_; ++i) {
    const int k = head_[i];
    if (!is_integer[static_cast<std::size_t>(k)]) continue;
    const double f0 = x_[k] - std::floor(x_[k]);
    if (f0 < kMinFrac || f0 > 1.0 - kMinFrac) continue;

    std::fill(coef.begin(), coef.end(), 0.0);
    double rhs = 1.0;
    const double* r = row(i);
    bool usable = true;
    for (int j = 0; j < total_ && usable; ++j) {
      if (state_[j] == State::Basic || std::fabs(r[j]) < 1e-11) continue;
      if (upper_[j] - lower_[j] < 1e-9) continue;
      const bool at_lower = state_[j] == State::AtLower;
      const double abar = at_lower ? r[j] : -r[j];
      double g;
      if (is_integer[static_cast<std::size_t>(j)]) {
        const double fj = abar - std::floor(abar);
        g = fj <= f0 ? fj / f0 : (1.0 - fj) / (1.0 - f0);
      } else {
        g = abar >= 0.0 ? abar / f0 : -abar / (1.0 - f0);
      }
      if (g == 0.0) continue;
      // g * t_j with t_j the distance from the active bound
      const double sign = at_lower ? 1.0 : -1.0;
      rhs += sign * g * (at_lower ? lower_[j] : upper_[j]);
      if (j < n_) {
        coef[j] += sign * g;
      } else {
        for (const auto& [col, a] : row_terms[j - n_]) coef[col] += sign * g * a;
      }
      if (!std::isfinite(rhs)) usable = false;
    }
    if (!usable) continue;

    double max_abs = 0.0;
    for (double c : coef) max_abs = std::max(max_abs, std::fabs(c));
    if (max_abs < 1e-9) continue;
    Cut cut;
    double min_abs = kInfinityLike;
    for (int j = 0; j < n_; ++j) {
      const double c = coef[j];
      if (c == 0.0) continue;
      if (std::fabs(c) < 1e-9 * max_abs) {
        // drop the term, paying its largest possible contribution
        rhs -= std::max(c * lower_[j], c * upper_[j]);
        continue;
      }
      min_abs = std::min(min_abs, std::fabs(c));
      cut.terms.push_back({j, c});
    }
    if (cut.terms.empty() || max_abs / min_abs > kMaxDynamism) continue;
    double activity = 0.0;
    double norm = 0.0;
    for (const auto& [j, c] : cut.terms) {
      activity += c * x_[j];
      norm += c * c;
    }
    rhs -= 1e-9 * std::max(1.0, std::fabs(rhs));
    const double violation = rhs - activity;
    if (violation <= 1e-6 * std::max(1.0, std::fabs(rhs))) continue;
    cut.rhs = rhs;
    cut.efficacy = violation / std::sqrt(norm);
    if (cut.efficacy < 1e-5) continue;
    cuts.push_back(std::move(cut));
  }
  std::sort(cuts.begin(), cuts.end(), [](const Cut& a, const Cut& b) { return a.efficacy > b.efficacy; });
  if (static_cast<int>(cuts.size()) > max_cuts) cuts.resize(static_cast<std::size_t>(max_cuts));
  return cuts;
}

}  // namespace prodtrans::mip::detail
