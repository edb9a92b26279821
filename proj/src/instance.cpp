#include "prodtrans/instance.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace prodtrans {

std::size_t PDSpec::new_product_count() const {
  return static_cast<std::size_t>(
      std::count_if(products.begin(), products.end(), [](const ProductSpec& p) { return p.is_new; }));
}

std::size_t Instance::pd_index(std::string_view id) const {
  for (std::size_t j = 0; j < pds.size(); ++j) {
    if (pds[j].id == id) return j;
  }
  throw std::out_of_range("unknown PD id '" + std::string(id) + "'");
}

LeaderDecision LeaderDecision::zero(const Instance& instance) {
  const auto periods = static_cast<std::size_t>(instance.horizon);
  LeaderDecision d;
  d.budget.assign(instance.pd_count(), 0);
  d.factory_alloc.assign(instance.pd_count(), Quantities(periods, 0));
  d.eng_alloc.assign(instance.pd_count(), Quantities(periods, 0));
  return d;
}

LeaderAggregate LeaderAggregate::from_allocation(const LeaderDecision& leader, int horizon) {
  LeaderAggregate agg;
  agg.factory_total.assign(static_cast<std::size_t>(horizon), 0);
  agg.eng_total.assign(static_cast<std::size_t>(horizon), 0);
  for (std::size_t j = 0; j < leader.factory_alloc.size(); ++j) {
    for (int t = 0; t < horizon; ++t) {
      agg.factory_total[t] += leader.factory_alloc[j].at(t);
      agg.eng_total[t] += leader.eng_alloc[j].at(t);
    }
  }
  return agg;
}

FollowerSolution FollowerSolution::do_nothing(const PDSpec& pd, int horizon) {
  const auto periods = static_cast<std::size_t>(horizon);
  FollowerSolution plan;
  const std::size_t n = pd.products.size();
  plan.production.assign(n, Quantities(periods, 0));
  plan.inventory.assign(n, Quantities(periods, 0));
  plan.dev_complete.assign(n, Quantities(periods, 0));
  plan.backorder.assign(n, Quantities(periods, 0));
  for (std::size_t i = 0; i < n; ++i) {
    std::int64_t cumulative = 0;
    for (std::size_t t = 0; t < periods; ++t) {
      cumulative += pd.products[i].demand.at(t);
      plan.backorder[i][t] = cumulative;
    }
  }
  plan.cost = plan_cost(pd, plan);
  return plan;
}

std::vector<Violation> validate_instance(const Instance& instance) {
  std::vector<Violation> out;
  auto add = [&](std::string field, std::string rule) { out.push_back({std::move(field), std::move(rule)}); };

  const int T = instance.horizon;
  if (T < 1) add("horizon", "must be a positive integer");
  const auto periods = static_cast<std::size_t>(std::max(T, 0));

  auto check_series = [&](const std::string& field, const auto& series, bool strictly_nonneg) {
    if (series.size() != periods) {
      add(field, "length must equal horizon (" + std::to_string(periods) + ")");
    }
    if (strictly_nonneg) {
      for (const auto& v : series) {
        if (v < std::decay_t<decltype(v)>{}) {
          add(field, "entries must be nonnegative");
          break;
        }
      }
    }
  };

  check_series("factory_cap", instance.factory_cap, true);
  check_series("eng_cap", instance.eng_cap, true);
  if (instance.total_budget < 0) add("total_budget", "must be nonnegative");
  if (instance.pds.empty()) add("pds", "at least one PD is required");

  std::set<std::string> pd_ids;
  std::set<std::string> product_ids;
  for (const auto& pd : instance.pds) {
    const std::string where = "pds[" + pd.id + "]";
    if (!pd_ids.insert(pd.id).second) add(where + ".id", "PD ids must be unique");
    if (pd.products.empty()) add(where + ".products", "at least one product is required");
    if (pd.factory_unit_cost <= Money{}) add(where + ".factory_unit_cost", "must be strictly positive");
    if (pd.eng_unit_cost <= Money{}) add(where + ".eng_unit_cost", "must be strictly positive");

    std::set<std::string> local_ids;
    for (const auto& p : pd.products) {
      const std::string pw = where + ".products[" + p.id + "]";
      if (!local_ids.insert(p.id).second) add(pw + ".id", "product ids must be unique within a PD");
      if (!product_ids.insert(p.id).second) add(pw + ".id", "product ids must be globally unique");
      if (p.owner != pd.id) add(pw + ".owner", "must equal the id of the enclosing PD");
      check_series(pw + ".demand", p.demand, true);
      check_series(pw + ".revenue", p.revenue, true);
      check_series(pw + ".prod_cost", p.prod_cost, true);
      check_series(pw + ".backorder_cost", p.backorder_cost, true);
      check_series(pw + ".holding_cost", p.holding_cost, true);
      if (p.dev_factory_req < 0) add(pw + ".dev_factory_req", "must be nonnegative");
      if (p.dev_eng_req < 0) add(pw + ".dev_eng_req", "must be nonnegative");
      if (!p.is_new && (p.dev_factory_req != 0 || p.dev_eng_req != 0)) {
        add(pw + ".dev_factory_req", "development requirements are only allowed on new products");
      }
    }
  }
  return out;
}

std::vector<Violation> validate_leader(const Instance& instance, const LeaderDecision& leader) {
  std::vector<Violation> out;
  const std::size_t J = instance.pd_count();
  const auto periods = static_cast<std::size_t>(instance.horizon);
  if (leader.budget.size() != J || leader.factory_alloc.size() != J || leader.eng_alloc.size() != J) {
    out.push_back({"leader", "must have one entry per PD"});
    return out;
  }
  std::int64_t budget_sum = 0;
  for (std::size_t j = 0; j < J; ++j) {
    if (leader.budget[j] < 0) out.push_back({"budget[" + std::to_string(j) + "]", "must be nonnegative"});
    budget_sum += leader.budget[j];
    if (leader.factory_alloc[j].size() != periods || leader.eng_alloc[j].size() != periods) {
      out.push_back({"alloc[" + std::to_string(j) + "]", "length must equal horizon"});
      return out;
    }
  }
  if (budget_sum > instance.total_budget) out.push_back({"budget", "sum exceeds total budget"});
  for (std::size_t t = 0; t < periods; ++t) {
    std::int64_t f = 0;
    std::int64_t e = 0;
    for (std::size_t j = 0; j < J; ++j) {
      if (leader.factory_alloc[j][t] < 0 || leader.eng_alloc[j][t] < 0) {
        out.push_back({"alloc[" + std::to_string(j) + "][" + std::to_string(t) + "]", "must be nonnegative"});
      }
      f += leader.factory_alloc[j][t];
      e += leader.eng_alloc[j][t];
    }
    if (f > instance.factory_cap[t]) out.push_back({"factory_alloc[t=" + std::to_string(t + 1) + "]", "exceeds factory capacity"});
    if (e > instance.eng_cap[t]) out.push_back({"eng_alloc[t=" + std::to_string(t + 1) + "]", "exceeds engineering capacity"});
  }
  return out;
}

Money allocation_cost(const PDSpec& pd, std::span<const std::int64_t> factory_alloc,
                      std::span<const std::int64_t> eng_alloc) {
  Money total;
  for (auto r : factory_alloc) total += pd.factory_unit_cost * r;
  for (auto r : eng_alloc) total += pd.eng_unit_cost * r;
  return total;
}

Money pd_revenue(const PDSpec& pd, const QuantityTable& backorder) {
  if (backorder.size() != pd.products.size()) {
    throw std::invalid_argument("backorder rows do not match products of PD " + pd.id);
  }
  Money total;
  for (std::size_t n = 0; n < pd.products.size(); ++n) {
    const auto& p = pd.products[n];
    const auto& v = backorder[n];
    if (v.size() != p.demand.size()) {
      throw std::invalid_argument("backorder length mismatch for product " + p.id);
    }
    std::int64_t previous = 0;
    for (std::size_t t = 0; t < v.size(); ++t) {
      total += p.revenue[t] * (p.demand[t] - v[t] + previous);
      previous = v[t];
    }
  }
  return total;
}

Money leader_objective(const Instance& instance, std::span<const QuantityTable> backorders,
                       std::span<const Money> costs) {
  if (backorders.size() != instance.pd_count() || costs.size() != instance.pd_count()) {
    throw std::invalid_argument("leader_objective: expected one backorder table and one cost per PD");
  }
  Money theta;
  for (std::size_t j = 0; j < instance.pd_count(); ++j) {
    const auto& table = backorders[j];
    for (const auto& row : table) {
      if (row.size() != static_cast<std::size_t>(instance.horizon)) {
        throw std::invalid_argument("leader_objective: backorder series length differs from horizon");
      }
    }
    theta += pd_revenue(instance.pds[j], table);
    theta -= costs[j];
  }
  return theta;
}

Money leader_objective(const Instance& instance, std::span<const FollowerSolution> plans) {
  std::vector<QuantityTable> v;
  std::vector<Money> c;
  v.reserve(plans.size());
  for (const auto& plan : plans) {
    v.push_back(plan.backorder);
    c.push_back(plan.cost);
  }
  return leader_objective(instance, v, c);
}

Money plan_cost(const PDSpec& pd, const FollowerSolution& plan) {
  const std::size_t n = pd.products.size();
  if (plan.production.size() != n || plan.backorder.size() != n || plan.inventory.size() != n) {
    throw std::invalid_argument("plan_cost: plan rows do not match products of PD " + pd.id);
  }
  Money total;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = pd.products[i];
    for (std::size_t t = 0; t < p.demand.size(); ++t) {
      total += p.backorder_cost[t] * plan.backorder[i].at(t);
      total += p.prod_cost[t] * plan.production[i].at(t);
      total += p.holding_cost[t] * plan.inventory[i].at(t);
    }
  }
  return total;
}

Money big_m(const Instance& instance, std::size_t pd) {
  const auto& spec = instance.pds.at(pd);
  Money total;
  for (const auto& p : spec.products) {
    std::int64_t cumulative = 0;
    for (std::size_t t = 0; t < p.demand.size(); ++t) {
      cumulative += p.demand[t];
      total += p.backorder_cost[t] * cumulative;
    }
  }
  return total;
}

std::uint64_t weak_composition_count(std::int64_t budget, int parts) {
  if (parts < 1) throw std::invalid_argument("weak_composition_count: parts must be >= 1");
  if (budget < 0) throw std::invalid_argument("weak_composition_count: budget must be >= 0");
  // binom(budget + k, k) with k = parts - 1, built as a running product; each
  // partial product is itself a binomial coefficient, so division is exact.
  const auto k = static_cast<std::uint64_t>(parts - 1);
  unsigned __int128 result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    result = result * (static_cast<std::uint64_t>(budget) + i) / i;
    if (result > std::numeric_limits<std::uint64_t>::max()) {
      throw std::overflow_error("weak_composition_count: result exceeds 64 bits");
    }
  }
  return static_cast<std::uint64_t>(result);
}

}  // namespace prodtrans
