#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "prodtrans/money.hpp"

namespace prodtrans {

/// Period-indexed series; position 0 is period t = 1.
using Quantities = std::vector<std::int64_t>;
using Prices = std::vector<Money>;
/// [row][period] table, rows being PDs or products depending on context.
using QuantityTable = std::vector<Quantities>;

struct ProductSpec {
  std::string id;
  std::string owner;  // id of the owning PD
  bool is_new = false;
  Quantities demand;
  Prices revenue;
  Prices prod_cost;
  Prices backorder_cost;
  Prices holding_cost;
  // Development requirements; zero for current products.
  std::int64_t dev_factory_req = 0;
  std::int64_t dev_eng_req = 0;
};

struct PDSpec {
  std::string id;
  std::vector<ProductSpec> products;
  Money factory_unit_cost;
  Money eng_unit_cost;

  std::size_t new_product_count() const;
};

struct Instance {
  int horizon = 0;
  std::vector<PDSpec> pds;
  Quantities factory_cap;
  Quantities eng_cap;
  std::int64_t total_budget = 0;

  std::size_t pd_count() const { return pds.size(); }
  std::size_t pd_index(std::string_view id) const;
};

/// Budget per PD and per-PD-per-period capacity allocations chosen by the leader.
struct LeaderDecision {
  Quantities budget;              // B_j
  QuantityTable factory_alloc;    // R^f_jt
  QuantityTable eng_alloc;        // R^e_jt

  static LeaderDecision zero(const Instance& instance);
  friend bool operator==(const LeaderDecision&, const LeaderDecision&) = default;
};

/// Aggregate capacity handed to the lower level (S^f_t, S^e_t).
struct LeaderAggregate {
  Quantities factory_total;
  Quantities eng_total;

  static LeaderAggregate from_allocation(const LeaderDecision& leader, int horizon);
};

/// One PD's plan. Rows of the quantity tables follow the PD's product order;
/// dev_complete has one row per product as well (all zero for current ones).
struct FollowerSolution {
  QuantityTable production;    // X
  QuantityTable backorder;     // V
  QuantityTable inventory;     // I
  QuantityTable dev_complete;  // Z, one-hot completion period
  Money cost;                  // phi

  static FollowerSolution do_nothing(const PDSpec& pd, int horizon);
  friend bool operator==(const FollowerSolution&, const FollowerSolution&) = default;
};

struct Violation {
  std::string field;
  std::string rule;
  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Checks every structural invariant of the instance types. An empty result
/// means the instance is well formed.
std::vector<Violation> validate_instance(const Instance& instance);

/// Budget and capacity limits of a leader decision (sum B <= total budget,
/// per-period allocations within capacity, nonnegativity, dimensions).
std::vector<Violation> validate_leader(const Instance& instance, const LeaderDecision& leader);

/// Capacity spending sum_t R^f_jt c^f_j + R^e_jt c^e_j of PD j under an allocation.
Money allocation_cost(const PDSpec& pd, std::span<const std::int64_t> factory_alloc,
                      std::span<const std::int64_t> eng_alloc);

/// Leader profit: revenue of served demand minus the PDs' costs.
/// backorders is indexed [pd][product][period]; V_{j,n,0} is taken as 0.
/// Throws std::invalid_argument on any dimension mismatch.
Money leader_objective(const Instance& instance, std::span<const QuantityTable> backorders,
                       std::span<const Money> costs);

/// Convenience overload over full plans.
Money leader_objective(const Instance& instance, std::span<const FollowerSolution> plans);

/// Revenue part of the leader objective for a single PD.
Money pd_revenue(const PDSpec& pd, const QuantityTable& backorder);

/// Exact follower cost of a plan (backorder + production + holding).
Money plan_cost(const PDSpec& pd, const FollowerSolution& plan);

/// Cost of the do-nothing plan (no production, everything backordered). Any
/// follower optimum is bounded by it, so it serves as the big-M of the
/// optimality cuts.
Money big_m(const Instance& instance, std::size_t pd);

/// Number of ways to split `budget` into `parts` ordered nonnegative integers,
/// binom(budget + parts - 1, parts - 1). Throws std::overflow_error when the
/// value does not fit in 64 bits and std::invalid_argument when parts < 1.
std::uint64_t weak_composition_count(std::int64_t budget, int parts);

}  // namespace prodtrans
