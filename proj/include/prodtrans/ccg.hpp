#pragma once

#include <filesystem>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "prodtrans/instance.hpp"
#include "prodtrans/master.hpp"
#include "prodtrans/mip/backend.hpp"

namespace prodtrans {

struct CcgParams {
  double epsilon = 1e-6;
  double master_time_limit = mip::kInfinity;
  double total_time_limit = mip::kInfinity;
  std::string backend = mip::default_backend_name();
  bool optimistic_eval = true;
  CutRule cut_rule = CutRule::Capacity;
  /// Solve the PDs of one incumbent evaluation concurrently.
  bool parallel = true;
  /// When set, every master model is written there in LP format.
  std::filesystem::path lp_dump_dir;
};

enum class CcgStatus { Optimal, Infeasible, TimeLimit, Exhausted };

const char* to_string(CcgStatus status);

struct TraceRow {
  int iter = 0;
  double relaxation_bound = 0.0;
  double incumbent_bound = 0.0;
  double gap = 0.0;
  double wall_seconds = 0.0;
  std::size_t n_columns = 0;
  std::size_t distinct_budgets = 0;
};

struct CcgResult {
  CcgStatus status = CcgStatus::Infeasible;
  bool has_incumbent = false;
  LeaderDecision leader;
  std::vector<FollowerSolution> plans;
  /// Exact leader objective of the incumbent.
  Money objective;
  double relaxation_bound = mip::kInfinity;
  double incumbent_bound = -mip::kInfinity;
  int iterations = 0;
  double wall_seconds = 0.0;
  std::vector<TraceRow> trace;
  std::vector<Column> columns;
  /// Distinct budget vectors among all master solutions, the last included.
  std::size_t distinct_budgets = 0;
};

/// Raised when an iteration proposes a (budget, capacity) pair that is
/// already a column; the cuts should make that impossible.
class DuplicateColumnError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct IncumbentEvaluation {
  Money bound;
  std::vector<FollowerSolution> plans;
  std::vector<Money> cost_star;
};

/// Follower responses to a leader decision and the resulting leader objective.
IncumbentEvaluation evaluate_incumbent(const Instance& instance, const LeaderDecision& leader,
                                       const mip::Backend& backend, bool optimistic, bool parallel = true,
                                       const mip::SolveLimits& limits = {});

CcgResult run_ccg(const Instance& instance, const CcgParams& params = {});

/// Number of budget vectors the master can choose from (sum at most the total budget).
std::uint64_t budget_vector_count(const Instance& instance);

/// Convergence trace with header
/// iter,relaxation_bound,incumbent_bound,gap,wall_seconds,n_columns,distinct_budgets
void write_trace_csv(const std::vector<TraceRow>& trace, std::ostream& out);

}  // namespace prodtrans
