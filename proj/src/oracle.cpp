#include "prodtrans/oracle.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <numeric>

namespace prodtrans {

namespace {

using mip::MipModel;
using mip::Relation;
using mip::Term;

/// One PD's plan model at a fixed allocation, kept separate from the
/// follower module so the oracle does not inherit its mistakes.
struct PlanModel {
  MipModel model;
  std::vector<std::vector<int>> x, v, i, z;
  std::vector<Term> cost;
  std::vector<Term> revenue;
  double revenue_constant = 0.0;
};

PlanModel plan_model(const Instance& inst, const PDSpec& pd, const Quantities& rf, const Quantities& re) {
  const auto T = static_cast<std::size_t>(inst.horizon);
  const std::size_t n = pd.products.size();
  PlanModel pm;
  auto& m = pm.model;
  pm.x.assign(n, {});
  pm.v.assign(n, {});
  pm.i.assign(n, {});
  pm.z.assign(n, {});
  for (std::size_t k = 0; k < n; ++k) {
    if (!pd.products[k].is_new) continue;
    for (std::size_t t = 0; t < T; ++t) pm.z[k].push_back(m.add_binary(""));
  }
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < n; ++k) {
      const auto& d = pd.products[k].demand;
      const auto upto = std::accumulate(d.begin(), d.begin() + static_cast<long>(t + 1), std::int64_t{0});
      const auto all = std::accumulate(d.begin(), d.end(), std::int64_t{0});
      pm.x[k].push_back(m.add_integer("", 0, static_cast<double>(rf[t])));
      pm.v[k].push_back(m.add_integer("", 0, static_cast<double>(upto)));
      pm.i[k].push_back(m.add_integer("", 0, static_cast<double>(all)));
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<Term> fac;
    std::vector<Term> eng;
    for (std::size_t k = 0; k < n; ++k) {
      fac.push_back({pm.x[k][t], 1.0});
      if (pd.products[k].is_new) {
        fac.push_back({pm.z[k][t], static_cast<double>(pd.products[k].dev_factory_req)});
        eng.push_back({pm.z[k][t], static_cast<double>(pd.products[k].dev_eng_req)});
      }
    }
    m.add_constraint(fac, Relation::LessEqual, static_cast<double>(rf[t]));
    m.add_constraint(eng, Relation::LessEqual, static_cast<double>(re[t]));
  }
  for (std::size_t k = 0; k < n; ++k) {
    const auto& p = pd.products[k];
    for (std::size_t t = 0; t < T; ++t) {
      // stock carried out of t = stock carried in + production - demand
      std::vector<Term> row = {{pm.i[k][t], 1.0}, {pm.v[k][t], -1.0}, {pm.x[k][t], -1.0}};
      if (t > 0) {
        row.push_back({pm.i[k][t - 1], -1.0});
        row.push_back({pm.v[k][t - 1], 1.0});
      }
      m.add_constraint(row, Relation::Equal, -static_cast<double>(p.demand[t]));
      pm.cost.push_back({pm.x[k][t], p.prod_cost[t].to_double()});
      pm.cost.push_back({pm.v[k][t], p.backorder_cost[t].to_double()});
      pm.cost.push_back({pm.i[k][t], p.holding_cost[t].to_double()});
      pm.revenue_constant += (p.revenue[t] * p.demand[t]).to_double();
      pm.revenue.push_back({pm.v[k][t], -p.revenue[t].to_double()});
      if (t > 0) pm.revenue.push_back({pm.v[k][t - 1], p.revenue[t].to_double()});
    }
    if (!p.is_new) continue;
    std::vector<Term> once;
    for (std::size_t t = 0; t < T; ++t) {
      once.push_back({pm.z[k][t], 1.0});
      std::vector<Term> gate = {{pm.x[k][t], 1.0}};
      for (std::size_t u = 0; u <= t; ++u) gate.push_back({pm.z[k][u], -static_cast<double>(inst.factory_cap[t])});
      m.add_constraint(gate, Relation::LessEqual, 0.0);
    }
    m.add_constraint(once, Relation::LessEqual, 1.0);
  }
  return pm;
}

struct Response {
  Money value;  // revenue minus cost
  FollowerSolution plan;
};

Response optimistic_response(const Instance& inst, const PDSpec& pd, const Quantities& rf, const Quantities& re,
                             const OracleLimits& limits) {
  auto pm = plan_model(inst, pd, rf, re);
  pm.model.set_objective(pm.cost, 0.0, mip::Sense::Minimize);
  const auto first = mip::reference_solve(pm.model, limits.follower);
  if (first.status != mip::SolveStatus::Optimal) {
    throw std::runtime_error("oracle: follower model of PD " + pd.id + " did not solve to optimality");
  }
  // Second pass: among plans of that cost, the one serving the most revenue.
  pm.model.add_constraint(pm.cost, Relation::Equal, first.objective);
  pm.model.set_objective(pm.revenue, pm.revenue_constant, mip::Sense::Maximize);
  const auto second = mip::reference_solve(pm.model, limits.follower);
  if (second.status != mip::SolveStatus::Optimal) {
    throw std::runtime_error("oracle: tie-break model of PD " + pd.id + " did not solve to optimality");
  }
  Response r;
  auto read = [&](const std::vector<std::vector<int>>& vars, std::size_t T) {
    QuantityTable out;
    for (const auto& row : vars) {
      Quantities q(T, 0);
      for (std::size_t t = 0; t < row.size(); ++t) q[t] = std::llround(second.values[static_cast<std::size_t>(row[t])]);
      out.push_back(std::move(q));
    }
    return out;
  };
  const auto T = static_cast<std::size_t>(inst.horizon);
  r.plan.production = read(pm.x, T);
  r.plan.backorder = read(pm.v, T);
  r.plan.inventory = read(pm.i, T);
  r.plan.dev_complete = read(pm.z, T);
  r.plan.cost = plan_cost(pd, r.plan);
  r.value = pd_revenue(pd, r.plan.backorder) - r.plan.cost;
  return r;
}

struct Allocation {
  Quantities rf;
  Quantities re;
  std::int64_t need;  // smallest integral budget that pays for it
};

std::vector<Allocation> affordable_allocations(const Instance& inst, const PDSpec& pd) {
  const auto T = static_cast<std::size_t>(inst.horizon);
  const Money cap = Money::from_units(inst.total_budget);
  std::vector<Allocation> out;
  Quantities rf(T, 0);
  Quantities re(T, 0);
  std::function<void(std::size_t, Money)> rec = [&](std::size_t t, Money spent) {
    if (t == T) {
      const std::int64_t micros = spent.micros();
      const std::int64_t need = (micros + Money::kScale - 1) / Money::kScale;
      out.push_back({rf, re, need});
      return;
    }
    for (std::int64_t f = 0; f <= inst.factory_cap[t]; ++f) {
      const Money with_f = spent + pd.factory_unit_cost * f;
      if (with_f > cap) break;
      for (std::int64_t e = 0; e <= inst.eng_cap[t]; ++e) {
        const Money with_e = with_f + pd.eng_unit_cost * e;
        if (with_e > cap) break;
        rf[t] = f;
        re[t] = e;
        rec(t + 1, with_e);
      }
    }
    rf[t] = 0;
    re[t] = 0;
  };
  rec(0, Money{});
  return out;
}

}  // namespace

OracleResult brute_force_bilevel(const Instance& instance, const OracleLimits& limits) {
  if (auto v = validate_instance(instance); !v.empty()) {
    throw std::invalid_argument("oracle: invalid instance (" + v.front().field + ": " + v.front().rule + ")");
  }
  const std::size_t J = instance.pd_count();
  const auto T = static_cast<std::size_t>(instance.horizon);
  std::vector<std::vector<Allocation>> options(J);
  for (std::size_t j = 0; j < J; ++j) options[j] = affordable_allocations(instance, instance.pds[j]);

  std::vector<std::map<std::size_t, Response>> memo(J);
  OracleResult result;
  auto response = [&](std::size_t j, std::size_t k) -> const Response& {
    auto it = memo[j].find(k);
    if (it == memo[j].end()) {
      ++result.follower_solves;
      it = memo[j]
               .emplace(k, optimistic_response(instance, instance.pds[j], options[j][k].rf, options[j][k].re, limits))
               .first;
    }
    return it->second;
  };

  bool have_best = false;
  std::vector<std::int64_t> best_key;
  std::vector<std::int64_t> budget(J, 0);
  std::vector<std::size_t> choice(J, 0);
  Quantities used_f(T, 0);
  Quantities used_e(T, 0);

  auto key_of = [&]() {
    std::vector<std::int64_t> key(budget.begin(), budget.end());
    for (std::size_t j = 0; j < J; ++j) {
      const auto& a = options[j][choice[j]];
      key.insert(key.end(), a.rf.begin(), a.rf.end());
    }
    for (std::size_t j = 0; j < J; ++j) {
      const auto& a = options[j][choice[j]];
      key.insert(key.end(), a.re.begin(), a.re.end());
    }
    return key;
  };

  std::function<void(std::size_t, std::int64_t, Money)> rec = [&](std::size_t j, std::int64_t left, Money partial) {
    if (j == J) {
      if (++result.leaves > limits.max_leaves) {
        throw OracleLimitExceeded("oracle: more than " + std::to_string(limits.max_leaves) + " leader decisions");
      }
      if (!have_best || partial > result.objective || (partial == result.objective && key_of() < best_key)) {
        have_best = true;
        result.objective = partial;
        best_key = key_of();
        result.leader = LeaderDecision::zero(instance);
        result.leader.budget.assign(budget.begin(), budget.end());
        result.plans.clear();
        for (std::size_t i = 0; i < J; ++i) {
          result.leader.factory_alloc[i] = options[i][choice[i]].rf;
          result.leader.eng_alloc[i] = options[i][choice[i]].re;
          result.plans.push_back(response(i, choice[i]).plan);
        }
      }
      return;
    }
    for (std::int64_t b = 0; b <= left; ++b) {
      budget[j] = b;
      for (std::size_t k = 0; k < options[j].size(); ++k) {
        const auto& a = options[j][k];
        if (a.need > b) continue;
        bool fits = true;
        for (std::size_t t = 0; t < T && fits; ++t) {
          fits = used_f[t] + a.rf[t] <= instance.factory_cap[t] && used_e[t] + a.re[t] <= instance.eng_cap[t];
        }
        if (!fits) continue;
        for (std::size_t t = 0; t < T; ++t) {
          used_f[t] += a.rf[t];
          used_e[t] += a.re[t];
        }
        choice[j] = k;
        rec(j + 1, left - b, partial + response(j, k).value);
        for (std::size_t t = 0; t < T; ++t) {
          used_f[t] -= a.rf[t];
          used_e[t] -= a.re[t];
        }
      }
    }
    budget[j] = 0;
  };
  rec(0, instance.total_budget, Money{});
  return result;
}

}  // namespace prodtrans
