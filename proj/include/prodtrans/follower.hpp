#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "prodtrans/instance.hpp"
#include "prodtrans/mip/backend.hpp"

namespace prodtrans {

/// The fixed allocation costs more than the PD's budget. Distinct from model
/// infeasibility: no follower decision can repair it.
class BudgetInfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A joint solution handed to check_equilibrium does not satisfy the shared
/// capacity couplings (or a PD's budget) exactly.
class CouplingViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The backend returned without a proven optimum (time limit, unexpected status).
class FollowerSolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FollowerContext {
  PDSpec pd;
  int horizon = 0;
  std::int64_t budget = 0;
  Quantities factory_alloc;
  Quantities eng_alloc;
  Quantities factory_cap;
};

FollowerContext make_follower_context(const Instance& instance, std::size_t pd, std::int64_t budget,
                                      Quantities factory_alloc, Quantities eng_alloc);
FollowerContext make_follower_context(const Instance& instance, std::size_t pd, const LeaderDecision& leader);

/// Capacity on the right-hand side of the usage rows: a constant when the
/// allocation is fixed, otherwise a model variable.
struct CapacityRef {
  std::int64_t constant = 0;
  int var = -1;
};

/// Variable indices of one PD's plan inside a model, laid out [product][period].
/// dev_complete rows of current products are empty.
struct PdBlock {
  std::vector<std::vector<int>> production;
  std::vector<std::vector<int>> backorder;
  std::vector<std::vector<int>> inventory;
  std::vector<std::vector<int>> dev_complete;
};

/// Appends the plan variables and the PD's usage, balance, single-completion
/// and production-gating rows. The budget row is the caller's business since
/// it only involves allocation variables.
PdBlock append_pd_block(mip::MipModel& model, const PDSpec& pd, int horizon, std::span<const CapacityRef> factory,
                        std::span<const CapacityRef> eng, std::span<const std::int64_t> factory_cap,
                        const std::string& prefix);

/// Follower cost (backorder + production + holding) over a block.
std::vector<mip::Term> cost_terms(const PDSpec& pd, const PdBlock& block);

/// Revenue of served demand over a block: returns the terms, with the
/// constant sum of pi*D written to `constant`.
std::vector<mip::Term> revenue_terms(const PDSpec& pd, const PdBlock& block, double& constant);

FollowerSolution extract_plan(const PDSpec& pd, const PdBlock& block, std::span<const double> values);

/// Rule violations of a plan under a fixed allocation; empty when feasible.
std::vector<std::string> plan_violations(const FollowerContext& ctx, const FollowerSolution& plan);

struct FollowerModel {
  mip::MipModel model;
  PdBlock block;
};

/// Cost-minimization model of one PD at a fixed (B, R). Throws
/// BudgetInfeasibleError when the allocation itself exceeds the budget.
FollowerModel build_follower_model(const FollowerContext& ctx);

/// Optimal plan at the context's allocation; cost is recomputed exactly.
FollowerSolution solve_follower(const FollowerContext& ctx, const mip::Backend& backend,
                                const mip::SolveLimits& limits = {});

/// Among plans whose cost equals cost_star, one with the largest revenue.
FollowerSolution optimistic_resolve(const FollowerContext& ctx, Money cost_star, const mip::Backend& backend,
                                    const mip::SolveLimits& limits = {});

struct EquilibriumModel {
  mip::MipModel model;
  std::vector<PdBlock> blocks;
  std::vector<std::vector<int>> factory_alloc;  // [pd][period]
  std::vector<std::vector<int>> eng_alloc;
};

/// Joint cost minimization over all PDs and their capacity shares, with
/// shares summing exactly to the aggregate in every period.
EquilibriumModel build_equilibrium_problem(const Instance& instance, std::span<const std::int64_t> budgets,
                                           const LeaderAggregate& aggregate);

struct JointSolution {
  LeaderDecision leader;
  std::vector<FollowerSolution> plans;
};

/// Solves EP(B, S); nullopt when no split of S fits the budgets.
std::optional<JointSolution> solve_equilibrium(const Instance& instance, std::span<const std::int64_t> budgets,
                                               const LeaderAggregate& aggregate, const mip::Backend& backend,
                                               const mip::SolveLimits& limits = {});

/// True iff no PD can lower its cost by re-planning with its capacity share
/// pinned by the couplings. Throws CouplingViolation when the shares do not
/// sum to the aggregate or break a PD's budget.
bool check_equilibrium(const Instance& instance, std::span<const std::int64_t> budgets,
                       const LeaderAggregate& aggregate, const JointSolution& joint, const mip::Backend& backend);

}  // namespace prodtrans
