#pragma once

#include <span>
#include <string>
#include <vector>

#include "prodtrans/follower.hpp"
#include "prodtrans/instance.hpp"
#include "prodtrans/mip/backend.hpp"

namespace prodtrans {

/// A generated (budget, capacity, follower optimum) tuple.
struct Column {
  Quantities budget_hat;       // per PD
  QuantityTable factory_hat;   // [pd][period]
  QuantityTable eng_hat;
  std::vector<Money> cost_star;

  friend bool operator==(const Column&, const Column&) = default;
};

std::vector<std::string> column_violations(const Instance& instance, const Column& column);

/// How a column's optimality cut on PD j may be released (alpha_gj = 1).
///  Capacity: only if some period gets less factory or engineering capacity
///            than the column gave PD j. Valid because a follower's optimal
///            cost cannot rise when its capacity grows.
///  Budget:   only if the budget vector moves away from the column's
///            (J * sum |B - B_hat| >= sum alpha). Can exclude the optimum when
///            two capacity splits share one budget vector.
enum class CutRule { Capacity, Budget };

const char* to_string(CutRule rule);
/// Throws std::invalid_argument for names other than "capacity" and "budget".
CutRule parse_cut_rule(const std::string& name);

struct MasterModel {
  mip::MipModel model;
  std::vector<int> budget;
  std::vector<std::vector<int>> factory_alloc;  // [pd][period]
  std::vector<std::vector<int>> eng_alloc;
  std::vector<PdBlock> blocks;
  // [column][pd]
  std::vector<std::vector<int>> alpha;
  // [column][pd]; empty rows under CutRule::Capacity
  std::vector<std::vector<int>> delta;
  std::vector<std::vector<int>> sign;
  // [column][pd] -> one indicator per period and resource where capacity
  // drops below the column's; empty under CutRule::Budget
  std::vector<std::vector<std::vector<int>>> drop;
};

/// Single-level restricted master over the given columns (maximization).
/// Throws std::invalid_argument for columns that break their invariants.
MasterModel build_master(const Instance& instance, std::span<const Column> columns,
                         CutRule rule = CutRule::Capacity);

struct MasterSolution {
  mip::SolveStatus status = mip::SolveStatus::Infeasible;
  LeaderDecision leader;
  std::vector<FollowerSolution> plans;  // the master's copies of the follower variables
  std::vector<Money> phi;
  std::vector<std::vector<int>> alphas;
  std::vector<std::vector<int>> deltas;
  std::vector<std::vector<int>> signs;
  /// Exact objective of the returned point; meaningful when a point exists.
  Money objective;
  /// Best proven bound reported by the backend (the relaxation value on optimal).
  double bound = 0.0;
  bool has_solution = false;
};

MasterSolution solve_master(const Instance& instance, const MasterModel& master, const mip::Backend& backend,
                            const mip::SolveLimits& limits = {});

}  // namespace prodtrans
