#pragma once

#include <random>
#include <string>
#include <vector>

#include "prodtrans/instance.hpp"

namespace prodtrans::testing {

inline Prices flat(int horizon, std::int64_t units) { return Prices(static_cast<std::size_t>(horizon), Money::from_units(units)); }

/// Product with the generator's cost structure (h=1, r=2, b=10) unless overridden.
inline ProductSpec product(std::string id, std::string owner, Quantities demand, std::int64_t revenue = 20) {
  const int T = static_cast<int>(demand.size());
  ProductSpec p;
  p.id = std::move(id);
  p.owner = std::move(owner);
  p.demand = std::move(demand);
  p.revenue = flat(T, revenue);
  p.prod_cost = flat(T, 2);
  p.backorder_cost = flat(T, 10);
  p.holding_cost = flat(T, 1);
  return p;
}

inline ProductSpec new_product(std::string id, std::string owner, Quantities demand, std::int64_t hf, std::int64_t he,
                               std::int64_t revenue = 20) {
  auto p = product(std::move(id), std::move(owner), std::move(demand), revenue);
  p.is_new = true;
  p.dev_factory_req = hf;
  p.dev_eng_req = he;
  return p;
}

inline PDSpec pd(std::string id, std::vector<ProductSpec> products, std::int64_t cf = 1, std::int64_t ce = 1) {
  PDSpec out;
  out.id = std::move(id);
  out.products = std::move(products);
  out.factory_unit_cost = Money::from_units(cf);
  out.eng_unit_cost = Money::from_units(ce);
  return out;
}

inline Instance instance(int horizon, std::vector<PDSpec> pds, Quantities factory_cap, Quantities eng_cap,
                         std::int64_t budget) {
  Instance inst;
  inst.horizon = horizon;
  inst.pds = std::move(pds);
  inst.factory_cap = std::move(factory_cap);
  inst.eng_cap = std::move(eng_cap);
  inst.total_budget = budget;
  return inst;
}

/// Two PDs, T=2, one current and one new product each.
inline Instance two_pd_instance() {
  return instance(2,
                  {pd("A", {product("a1", "A", {3, 2}), new_product("a2", "A", {0, 3}, 2, 1)}, 1, 2),
                   pd("B", {product("b1", "B", {2, 2}, 25), new_product("b2", "B", {0, 2}, 1, 1)}, 2, 1)},
                  {5, 6}, {2, 2}, 12);
}

inline Instance zero_demand_instance() {
  return instance(2, {pd("A", {product("a1", "A", {0, 0})}), pd("B", {product("b1", "B", {0, 0})})}, {3, 3}, {1, 1},
                  4);
}

/// Small random instance with generator-style costs, sized for exhaustive checks.
inline Instance random_tiny_instance(std::uint64_t seed, int horizon = 2, int products = 2) {
  std::mt19937_64 rng(seed);
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  std::vector<PDSpec> pds;
  for (int j = 0; j < 2; ++j) {
    const std::string id = std::string(1, static_cast<char>('A' + j));
    std::vector<ProductSpec> prods;
    for (int n = 0; n < products; ++n) {
      Quantities demand;
      for (int t = 0; t < horizon; ++t) demand.push_back(uni(0, 3));
      const std::string pid = id + std::to_string(n);
      if (n + 1 == products) {
        prods.push_back(new_product(pid, id, demand, uni(1, 2), uni(1, 2), uni(20, 30)));
      } else {
        prods.push_back(product(pid, id, demand, uni(20, 30)));
      }
    }
    pds.push_back(pd(id, std::move(prods), uni(1, 3), uni(1, 3)));
  }
  Quantities cf;
  Quantities ce;
  for (int t = 0; t < horizon; ++t) {
    cf.push_back(uni(2, 5));
    ce.push_back(uni(1, 3));
  }
  return instance(horizon, std::move(pds), cf, ce, uni(3, 8));
}

/// random_tiny_instance with every per-period price redrawn so that revenue,
/// production, holding and backorder costs pull in different directions.
/// Such instances need several CCG iterations more often than generated ones.
inline Instance conflicting_cost_instance(std::uint64_t seed, int horizon = 2) {
  auto inst = random_tiny_instance(seed, horizon, 2);
  std::mt19937_64 rng(seed * 7 + 1);
  for (auto& pd : inst.pds) {
    for (auto& p : pd.products) {
      for (std::size_t t = 0; t < static_cast<std::size_t>(horizon); ++t) {
        p.prod_cost[t] = Money::from_units(static_cast<std::int64_t>(1 + rng() % 15));
        p.backorder_cost[t] = Money::from_units(static_cast<std::int64_t>(1 + rng() % 12));
        p.holding_cost[t] = Money::from_units(static_cast<std::int64_t>(rng() % 4));
        p.revenue[t] = Money::from_units(static_cast<std::int64_t>(rng() % 30));
        p.demand[t] = static_cast<std::int64_t>(rng() % 4);
      }
    }
  }
  return inst;
}

}  // namespace prodtrans::testing
