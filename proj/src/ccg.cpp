#include "prodtrans/ccg.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

#include "prodtrans/follower.hpp"

namespace prodtrans {

const char* to_string(CcgStatus status) {
  switch (status) {
    case CcgStatus::Optimal: return "optimal";
    case CcgStatus::Infeasible: return "infeasible";
    case CcgStatus::TimeLimit: return "time_limit";
    case CcgStatus::Exhausted: return "exhausted";
  }
  return "unknown";
}

IncumbentEvaluation evaluate_incumbent(const Instance& instance, const LeaderDecision& leader,
                                       const mip::Backend& backend, bool optimistic, bool parallel,
                                       const mip::SolveLimits& limits) {
  const std::size_t J = instance.pd_count();
  auto respond = [&](std::size_t j) {
    const auto ctx = make_follower_context(instance, j, leader);
    auto plan = solve_follower(ctx, backend, limits);
    if (optimistic) plan = optimistic_resolve(ctx, plan.cost, backend, limits);
    return plan;
  };
  IncumbentEvaluation out;
  if (parallel && J > 1) {
    std::vector<std::future<FollowerSolution>> jobs;
    for (std::size_t j = 0; j < J; ++j) jobs.push_back(std::async(std::launch::async, respond, j));
    for (auto& job : jobs) out.plans.push_back(job.get());
  } else {
    for (std::size_t j = 0; j < J; ++j) out.plans.push_back(respond(j));
  }
  for (const auto& plan : out.plans) out.cost_star.push_back(plan.cost);
  out.bound = leader_objective(instance, out.plans);
  return out;
}

std::uint64_t budget_vector_count(const Instance& instance) {
  // Budgets with sum <= total are weak compositions of the total into J + 1
  // parts, the last part being the unspent remainder.
  return weak_composition_count(instance.total_budget, static_cast<int>(instance.pd_count()) + 1);
}

CcgResult run_ccg(const Instance& instance, const CcgParams& params) {
  if (!(params.epsilon > 0.0)) throw std::invalid_argument("run_ccg: epsilon must be positive");
  if (!(params.master_time_limit > 0.0) || !(params.total_time_limit > 0.0)) {
    throw std::invalid_argument("run_ccg: time limits must be positive");
  }
  if (auto v = validate_instance(instance); !v.empty()) {
    throw std::invalid_argument("run_ccg: invalid instance (" + v.front().field + ": " + v.front().rule + ")");
  }
  const auto backend = mip::make_backend(params.backend);
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  // Only the budget rule can exhaust the space; a count beyond 64 bits is never reached.
  std::uint64_t budget_space = std::numeric_limits<std::uint64_t>::max();
  if (params.cut_rule == CutRule::Budget) {
    try {
      budget_space = budget_vector_count(instance);
    } catch (const std::overflow_error&) {
    }
  }

  CcgResult result;
  std::set<Quantities> budgets_seen;
  auto finish = [&](CcgStatus status) {
    result.status = status;
    result.wall_seconds = elapsed();
    result.distinct_budgets = budgets_seen.size();
    return result;
  };

  for (int k = 1;; ++k) {
    const double remaining = params.total_time_limit - elapsed();
    if (remaining <= 0.0) return finish(CcgStatus::TimeLimit);
    mip::SolveLimits master_limits;
    master_limits.time_seconds = std::min(params.master_time_limit, remaining);

    const auto master = build_master(instance, result.columns, params.cut_rule);
    if (!params.lp_dump_dir.empty()) {
      std::filesystem::create_directories(params.lp_dump_dir);
      std::ofstream lp(params.lp_dump_dir / ("master_" + std::to_string(k) + ".lp"));
      mip::write_lp_format(master.model, lp);
    }
    const auto ms = solve_master(instance, master, *backend, master_limits);
    result.iterations = k;
    if (ms.status == mip::SolveStatus::Infeasible) return finish(CcgStatus::Infeasible);
    auto evaluate = [&]() -> std::optional<IncumbentEvaluation> {
      mip::SolveLimits follower_limits;
      follower_limits.time_seconds = std::max(0.0, params.total_time_limit - elapsed());
      IncumbentEvaluation eval;
      try {
        eval = evaluate_incumbent(instance, ms.leader, *backend, params.optimistic_eval, params.parallel, follower_limits);
      } catch (const FollowerSolveError&) {
        if (params.total_time_limit - elapsed() <= 0.0) return std::nullopt;
        throw;
      }
      if (!result.has_incumbent || eval.bound > result.objective) {
        result.has_incumbent = true;
        result.objective = eval.bound;
        result.leader = ms.leader;
        result.plans = eval.plans;
        result.incumbent_bound = eval.bound.to_double();
      }
      return eval;
    };

    if (ms.status != mip::SolveStatus::Optimal) {
      // A master stopped early still proves its bound, and any point it
      // found is a leader decision worth evaluating.
      result.relaxation_bound = std::min(result.relaxation_bound, ms.bound);
      if (ms.has_solution) {
        budgets_seen.insert(ms.leader.budget);
        if (evaluate()) {
          result.trace.push_back({k, result.relaxation_bound, result.incumbent_bound,
                                  result.relaxation_bound - result.incumbent_bound, elapsed(), result.columns.size(),
                                  budgets_seen.size()});
        }
      }
      return finish(CcgStatus::TimeLimit);
    }
    const double relaxation = ms.objective.to_double();
    result.relaxation_bound = relaxation;
    budgets_seen.insert(ms.leader.budget);

    const auto evaluated = evaluate();
    if (!evaluated) return finish(CcgStatus::TimeLimit);
    const auto& eval = *evaluated;

    Column column{ms.leader.budget, ms.leader.factory_alloc, ms.leader.eng_alloc, eval.cost_star};
    const double gap = relaxation - result.incumbent_bound;
    const bool closes = gap < params.epsilon;
    result.trace.push_back({k, relaxation, result.incumbent_bound, gap, elapsed(), result.columns.size(),
                            budgets_seen.size()});
    if (closes) return finish(CcgStatus::Optimal);

    for (const auto& c : result.columns) {
      if (c.budget_hat == column.budget_hat && c.factory_hat == column.factory_hat && c.eng_hat == column.eng_hat) {
        std::ostringstream msg;
        msg << "run_ccg: iteration " << k << " repeated an existing column (gap " << gap << ")";
        throw DuplicateColumnError(msg.str());
      }
    }
    result.columns.push_back(std::move(column));
    result.trace.back().n_columns = result.columns.size();
    if (params.cut_rule == CutRule::Budget && budgets_seen.size() >= budget_space) {
      return finish(CcgStatus::Exhausted);
    }
  }
}

void write_trace_csv(const std::vector<TraceRow>& trace, std::ostream& out) {
  out << "iter,relaxation_bound,incumbent_bound,gap,wall_seconds,n_columns,distinct_budgets\n";
  for (const auto& r : trace) {
    out << r.iter << ',' << std::setprecision(17) << r.relaxation_bound << ',' << r.incumbent_bound << ',' << r.gap
        << ',' << std::setprecision(6) << std::fixed << r.wall_seconds << std::defaultfloat << ',' << r.n_columns
        << ',' << r.distinct_budgets << '\n';
  }
}

}  // namespace prodtrans
