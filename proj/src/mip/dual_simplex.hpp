#pragma once

#include <chrono>
#include <utility>
#include <vector>

namespace prodtrans::mip::detail {

/// min c'x  s.t.  row_lower <= A x <= row_upper,  col_lower <= x <= col_upper.
/// Structural bounds must be finite; row bounds may be infinite.
struct LpData {
  int rows = 0;
  int cols = 0;
  std::vector<std::vector<std::pair<int, double>>> columns;  // (row, value) per column
  std::vector<double> col_lower;
  std::vector<double> col_upper;
  std::vector<double> row_lower;
  std::vector<double> row_upper;
  std::vector<double> cost;
};

/// Numerical: the basis is too ill-conditioned to decide feasibility.
enum class LpStatus { Optimal, Infeasible, Cutoff, IterationLimit, TimeLimit, Numerical };

/// sum(terms) >= rhs over structural columns.
struct Cut {
  std::vector<std::pair<int, double>> terms;
  double rhs = 0.0;
  double efficacy = 0.0;
};

/// Bounded dual simplex on an explicit dense tableau B^-1 [A | -I].
///
/// Every column of the tableau is a variable: structurals first, then one
/// logical per row carrying the row activity. The starting basis is all
/// logicals with structurals at the bound their cost prefers, which is dual
/// feasible. Bound changes keep dual feasibility, so successive solves after
/// branching re-optimize from the previous basis.
class DualSimplex {
 public:
  using Clock = std::chrono::steady_clock;

  explicit DualSimplex(LpData data);

  void set_column_bounds(int col, double lower, double upper);
  double column_lower(int col) const { return lower_[static_cast<std::size_t>(col)]; }
  double column_upper(int col) const { return upper_[static_cast<std::size_t>(col)]; }

  /// Stops early with Cutoff once the dual objective exceeds `cutoff`.
  LpStatus solve(double cutoff, Clock::time_point deadline);

  double objective() const;
  std::vector<double> column_values() const;
  long long iterations() const { return iterations_; }
  /// Zero for basic columns.
  double reduced_cost(int col) const {
    return state_[static_cast<std::size_t>(col)] == State::Basic ? 0.0 : d_[static_cast<std::size_t>(col)];
  }

  /// Gomory mixed-integer cuts read off the rows of fractional basic integer
  /// structurals at the current optimum. Valid wherever the current column
  /// bounds are, so callers use them globally only at the root. Returned by
  /// decreasing efficacy, at most max_cuts of them.
  std::vector<Cut> gomory_cuts(const std::vector<char>& is_integer, int max_cuts) const;

 private:
  enum class State : unsigned char { Basic, AtLower, AtUpper };

  double* row(int i) { return tableau_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(total_); }
  const double* row(int i) const {
    return tableau_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(total_);
  }

  void refactor();
  void recompute_primal();
  void recompute_duals();
  bool restore_dual_feasibility();
  double primal_residual() const;
  double tableau_error() const;
  int choose_leaving_row(const std::vector<double>& tolerated) const;
  double blocked_reach(int r, bool to_lower) const;
  int choose_entering_column(int leaving_row, bool to_lower, double pivot_tol) const;
  void pivot(int leaving_row, int entering, bool to_lower);
  void perturb();

  int m_ = 0;
  int n_ = 0;
  int total_ = 0;
  std::vector<std::vector<std::pair<int, double>>> columns_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<double> cost_;
  std::vector<double> x_;
  std::vector<double> d_;
  std::vector<State> state_;
  std::vector<int> head_;   // basic column of each row
  std::vector<int> where_;  // row of a basic column, -1 otherwise
  std::vector<double> tableau_;
  std::vector<int> pivot_nz_;
  int pivots_since_refactor_ = 0;
  bool perturbed_ = false;
  std::vector<double> original_cost_;
  unsigned long long rng_state_ = 0x853c49e6748fea9bULL;
  long long iterations_ = 0;
};

}  // namespace prodtrans::mip::detail
