#include "prodtrans/follower.hpp"

#include <cmath>
#include <numeric>

namespace prodtrans {

using mip::Relation;
using mip::Term;

FollowerContext make_follower_context(const Instance& instance, std::size_t pd, std::int64_t budget,
                                      Quantities factory_alloc, Quantities eng_alloc) {
  FollowerContext ctx;
  ctx.pd = instance.pds.at(pd);
  ctx.horizon = instance.horizon;
  ctx.budget = budget;
  ctx.factory_alloc = std::move(factory_alloc);
  ctx.eng_alloc = std::move(eng_alloc);
  ctx.factory_cap = instance.factory_cap;
  return ctx;
}

FollowerContext make_follower_context(const Instance& instance, std::size_t pd, const LeaderDecision& leader) {
  return make_follower_context(instance, pd, leader.budget.at(pd), leader.factory_alloc.at(pd), leader.eng_alloc.at(pd));
}

namespace {

void add_ref(std::vector<Term>& terms, double& rhs, const CapacityRef& ref) {
  if (ref.var >= 0) {
    terms.push_back({ref.var, -1.0});
  } else {
    rhs += static_cast<double>(ref.constant);
  }
}

std::string tag(const std::string& prefix, const std::string& what, const std::string& product, int t) {
  return prefix + what + "[" + product + "," + std::to_string(t + 1) + "]";
}

}  // namespace

PdBlock append_pd_block(mip::MipModel& model, const PDSpec& pd, int horizon, std::span<const CapacityRef> factory,
                        std::span<const CapacityRef> eng, std::span<const std::int64_t> factory_cap,
                        const std::string& prefix) {
  const std::size_t n = pd.products.size();
  const auto T = static_cast<std::size_t>(horizon);
  PdBlock block;
  block.production.assign(n, std::vector<int>(T, -1));
  block.backorder.assign(n, std::vector<int>(T, -1));
  block.inventory.assign(n, std::vector<int>(T, -1));
  block.dev_complete.assign(n, {});

  // Development indicators first: few binaries that decide most of the plan.
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = pd.products[i];
    if (!p.is_new) continue;
    for (std::size_t t = 0; t < T; ++t) {
      block.dev_complete[i].push_back(model.add_binary(tag(prefix, "Z", p.id, static_cast<int>(t))));
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    const double x_upper = static_cast<double>(factory[t].var >= 0 ? factory_cap[t] : factory[t].constant);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = pd.products[i];
      const std::int64_t cumulative = std::accumulate(p.demand.begin(), p.demand.begin() + static_cast<long>(t) + 1,
                                                      std::int64_t{0});
      const std::int64_t total = std::accumulate(p.demand.begin(), p.demand.end(), std::int64_t{0});
      const int ti = static_cast<int>(t);
      block.production[i][t] = model.add_integer(tag(prefix, "X", p.id, ti), 0, x_upper);
      block.backorder[i][t] = model.add_integer(tag(prefix, "V", p.id, ti), 0, static_cast<double>(cumulative));
      block.inventory[i][t] = model.add_integer(tag(prefix, "I", p.id, ti), 0, static_cast<double>(total));
    }
  }

  for (std::size_t t = 0; t < T; ++t) {
    const int ti = static_cast<int>(t) + 1;
    std::vector<Term> factory_use;
    std::vector<Term> eng_use;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = pd.products[i];
      if (p.is_new) {
        if (p.dev_factory_req != 0) {
          factory_use.push_back({block.dev_complete[i][t], static_cast<double>(p.dev_factory_req)});
        }
        if (p.dev_eng_req != 0) eng_use.push_back({block.dev_complete[i][t], static_cast<double>(p.dev_eng_req)});
      }
      factory_use.push_back({block.production[i][t], 1.0});
    }
    double rhs = 0.0;
    add_ref(factory_use, rhs, factory[t]);
    model.add_constraint(std::move(factory_use), Relation::LessEqual, rhs, prefix + "factory[" + std::to_string(ti) + "]");
    if (!eng_use.empty()) {
      double eng_rhs = 0.0;
      add_ref(eng_use, eng_rhs, eng[t]);
      model.add_constraint(std::move(eng_use), Relation::LessEqual, eng_rhs, prefix + "eng[" + std::to_string(ti) + "]");
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = pd.products[i];
    for (std::size_t t = 0; t < T; ++t) {
      // I_t - I_{t-1} - X_t + V_{t-1} - V_t = -D_t
      std::vector<Term> balance = {{block.inventory[i][t], 1.0},
                                   {block.production[i][t], -1.0},
                                   {block.backorder[i][t], -1.0}};
      if (t > 0) {
        balance.push_back({block.inventory[i][t - 1], -1.0});
        balance.push_back({block.backorder[i][t - 1], 1.0});
      }
      model.add_constraint(std::move(balance), Relation::Equal, -static_cast<double>(p.demand[t]),
                           tag(prefix, "balance", p.id, static_cast<int>(t)));
    }
    if (!p.is_new) continue;
    std::vector<Term> once;
    for (int z : block.dev_complete[i]) once.push_back({z, 1.0});
    model.add_constraint(std::move(once), Relation::LessEqual, 1.0, prefix + "once[" + p.id + "]");
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<Term> gate = {{block.production[i][t], 1.0}};
      const double cap = static_cast<double>(factory_cap[t]);
      for (std::size_t tau = 0; tau <= t; ++tau) {
        if (cap != 0.0) gate.push_back({block.dev_complete[i][tau], -cap});
      }
      model.add_constraint(std::move(gate), Relation::LessEqual, 0.0, tag(prefix, "gate", p.id, static_cast<int>(t)));
    }
  }
  return block;
}

std::vector<Term> cost_terms(const PDSpec& pd, const PdBlock& block) {
  std::vector<Term> terms;
  for (std::size_t i = 0; i < pd.products.size(); ++i) {
    const auto& p = pd.products[i];
    for (std::size_t t = 0; t < p.demand.size(); ++t) {
      if (p.backorder_cost[t] != Money{}) terms.push_back({block.backorder[i][t], p.backorder_cost[t].to_double()});
      if (p.prod_cost[t] != Money{}) terms.push_back({block.production[i][t], p.prod_cost[t].to_double()});
      if (p.holding_cost[t] != Money{}) terms.push_back({block.inventory[i][t], p.holding_cost[t].to_double()});
    }
  }
  return terms;
}

std::vector<Term> revenue_terms(const PDSpec& pd, const PdBlock& block, double& constant) {
  std::vector<Term> terms;
  Money fixed;
  for (std::size_t i = 0; i < pd.products.size(); ++i) {
    const auto& p = pd.products[i];
    const std::size_t T = p.demand.size();
    for (std::size_t t = 0; t < T; ++t) {
      fixed += p.revenue[t] * p.demand[t];
      // V_t is subtracted in period t and added back in period t+1.
      Money coef = -p.revenue[t];
      if (t + 1 < T) coef += p.revenue[t + 1];
      if (coef != Money{}) terms.push_back({block.backorder[i][t], coef.to_double()});
    }
  }
  constant = fixed.to_double();
  return terms;
}

FollowerSolution extract_plan(const PDSpec& pd, const PdBlock& block, std::span<const double> values) {
  auto read = [&](const std::vector<std::vector<int>>& vars) {
    QuantityTable out(vars.size());
    for (std::size_t i = 0; i < vars.size(); ++i) {
      for (int v : vars[i]) out[i].push_back(std::llround(values[static_cast<std::size_t>(v)]));
    }
    return out;
  };
  FollowerSolution plan;
  plan.production = read(block.production);
  plan.backorder = read(block.backorder);
  plan.inventory = read(block.inventory);
  plan.dev_complete = read(block.dev_complete);
  const std::size_t T = block.production.empty() ? 0 : block.production.front().size();
  for (auto& row : plan.dev_complete) {
    if (row.empty()) row.assign(T, 0);
  }
  plan.cost = plan_cost(pd, plan);
  return plan;
}

std::vector<std::string> plan_violations(const FollowerContext& ctx, const FollowerSolution& plan) {
  std::vector<std::string> out;
  const auto& pd = ctx.pd;
  const std::size_t n = pd.products.size();
  const auto T = static_cast<std::size_t>(ctx.horizon);
  auto shaped = [&](const QuantityTable& table) {
    if (table.size() != n) return false;
    for (const auto& row : table) {
      if (row.size() != T) return false;
    }
    return true;
  };
  if (!shaped(plan.production) || !shaped(plan.backorder) || !shaped(plan.inventory) || !shaped(plan.dev_complete)) {
    out.emplace_back("plan dimensions do not match the PD");
    return out;
  }
  for (std::size_t t = 0; t < T; ++t) {
    std::int64_t factory = 0;
    std::int64_t eng = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = pd.products[i];
      factory += plan.production[i][t] + p.dev_factory_req * plan.dev_complete[i][t];
      eng += p.dev_eng_req * plan.dev_complete[i][t];
    }
    if (factory > ctx.factory_alloc[t]) out.push_back("factory usage exceeds allocation in period " + std::to_string(t + 1));
    if (eng > ctx.eng_alloc[t]) out.push_back("engineering usage exceeds allocation in period " + std::to_string(t + 1));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = pd.products[i];
    std::int64_t completed = 0;
    for (std::size_t t = 0; t < T; ++t) {
      const std::string at = p.id + " period " + std::to_string(t + 1);
      if (plan.production[i][t] < 0 || plan.backorder[i][t] < 0 || plan.inventory[i][t] < 0) {
        out.push_back("negative quantity for " + at);
      }
      const std::int64_t z = plan.dev_complete[i][t];
      if (z != 0 && z != 1) out.push_back("development indicator not binary for " + at);
      if (!p.is_new && z != 0) out.push_back("development on a current product " + at);
      completed += z;
      const std::int64_t prev_i = t > 0 ? plan.inventory[i][t - 1] : 0;
      const std::int64_t prev_v = t > 0 ? plan.backorder[i][t - 1] : 0;
      if (plan.inventory[i][t] - prev_i - plan.production[i][t] + prev_v - plan.backorder[i][t] != -p.demand[t]) {
        out.push_back("inventory balance broken for " + at);
      }
      if (p.is_new && completed == 0 && plan.production[i][t] != 0) out.push_back("production before development for " + at);
      if (p.is_new && plan.production[i][t] > ctx.factory_cap[t] * completed) {
        out.push_back("production exceeds gated capacity for " + at);
      }
    }
    if (completed > 1) out.push_back("development completed more than once for " + p.id);
  }
  return out;
}

namespace {

void check_budget(const FollowerContext& ctx) {
  if (ctx.factory_alloc.size() != static_cast<std::size_t>(ctx.horizon) ||
      ctx.eng_alloc.size() != static_cast<std::size_t>(ctx.horizon)) {
    throw std::invalid_argument("follower context: allocation length differs from horizon");
  }
  for (std::size_t t = 0; t < ctx.factory_alloc.size(); ++t) {
    if (ctx.factory_alloc[t] < 0 || ctx.eng_alloc[t] < 0) {
      throw std::invalid_argument("follower context: negative allocation");
    }
  }
  const Money spend = allocation_cost(ctx.pd, ctx.factory_alloc, ctx.eng_alloc);
  if (spend > Money::from_units(ctx.budget)) {
    throw BudgetInfeasibleError("PD " + ctx.pd.id + ": allocation costs " + spend.to_string() + " but budget is " +
                                std::to_string(ctx.budget));
  }
}

}  // namespace

FollowerModel build_follower_model(const FollowerContext& ctx) {
  check_budget(ctx);
  FollowerModel out;
  const auto T = static_cast<std::size_t>(ctx.horizon);
  std::vector<CapacityRef> factory(T);
  std::vector<CapacityRef> eng(T);
  for (std::size_t t = 0; t < T; ++t) {
    factory[t].constant = ctx.factory_alloc[t];
    eng[t].constant = ctx.eng_alloc[t];
  }
  out.block = append_pd_block(out.model, ctx.pd, ctx.horizon, factory, eng, ctx.factory_cap, "");
  out.model.set_objective(cost_terms(ctx.pd, out.block), 0.0, mip::Sense::Minimize);
  return out;
}

namespace {

mip::MipSolution checked_solve(const mip::MipModel& model, const mip::Backend& backend, const mip::SolveLimits& limits,
                               const std::string& what) {
  auto sol = mip::solve(model, limits, backend);
  if (sol.status != mip::SolveStatus::Optimal) {
    throw FollowerSolveError(what + ": backend returned " + mip::to_string(sol.status));
  }
  return sol;
}

}  // namespace

FollowerSolution solve_follower(const FollowerContext& ctx, const mip::Backend& backend,
                                const mip::SolveLimits& limits) {
  auto fm = build_follower_model(ctx);
  const auto sol = checked_solve(fm.model, backend, limits, "PD " + ctx.pd.id);
  return extract_plan(ctx.pd, fm.block, sol.values);
}

FollowerSolution optimistic_resolve(const FollowerContext& ctx, Money cost_star, const mip::Backend& backend,
                                    const mip::SolveLimits& limits) {
  auto fm = build_follower_model(ctx);
  fm.model.add_constraint(cost_terms(ctx.pd, fm.block), Relation::Equal, cost_star.to_double(), "cost_star");
  double constant = 0.0;
  fm.model.set_objective(revenue_terms(ctx.pd, fm.block, constant), constant, mip::Sense::Maximize);
  auto sol = mip::solve(fm.model, limits, backend);
  if (sol.status == mip::SolveStatus::Infeasible) {
    throw std::logic_error("optimistic_resolve: cost " + cost_star.to_string() + " is not attainable for PD " +
                           ctx.pd.id);
  }
  if (sol.status != mip::SolveStatus::Optimal) {
    throw FollowerSolveError("PD " + ctx.pd.id + " optimistic re-solve: backend returned " + mip::to_string(sol.status));
  }
  auto plan = extract_plan(ctx.pd, fm.block, sol.values);
  if (plan.cost != cost_star) {
    throw std::logic_error("optimistic_resolve: re-solved plan costs " + plan.cost.to_string() + " instead of " +
                           cost_star.to_string());
  }
  return plan;
}

EquilibriumModel build_equilibrium_problem(const Instance& instance, std::span<const std::int64_t> budgets,
                                           const LeaderAggregate& aggregate) {
  const std::size_t J = instance.pd_count();
  const auto T = static_cast<std::size_t>(instance.horizon);
  if (budgets.size() != J) throw std::invalid_argument("build_equilibrium_problem: one budget per PD expected");
  if (aggregate.factory_total.size() != T || aggregate.eng_total.size() != T) {
    throw std::invalid_argument("build_equilibrium_problem: aggregate length differs from horizon");
  }
  EquilibriumModel ep;
  auto& m = ep.model;
  ep.factory_alloc.assign(J, std::vector<int>(T));
  ep.eng_alloc.assign(J, std::vector<int>(T));
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t t = 0; t < T; ++t) {
      const std::string at = "[" + instance.pds[j].id + "," + std::to_string(t + 1) + "]";
      ep.factory_alloc[j][t] = m.add_integer("Rf" + at, 0, static_cast<double>(aggregate.factory_total[t]));
      ep.eng_alloc[j][t] = m.add_integer("Re" + at, 0, static_cast<double>(aggregate.eng_total[t]));
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<Term> f;
    std::vector<Term> e;
    for (std::size_t j = 0; j < J; ++j) {
      f.push_back({ep.factory_alloc[j][t], 1.0});
      e.push_back({ep.eng_alloc[j][t], 1.0});
    }
    m.add_constraint(std::move(f), Relation::Equal, static_cast<double>(aggregate.factory_total[t]),
                     "share_factory[" + std::to_string(t + 1) + "]");
    m.add_constraint(std::move(e), Relation::Equal, static_cast<double>(aggregate.eng_total[t]),
                     "share_eng[" + std::to_string(t + 1) + "]");
  }
  std::vector<Term> objective;
  for (std::size_t j = 0; j < J; ++j) {
    const auto& pd = instance.pds[j];
    std::vector<Term> spend;
    for (std::size_t t = 0; t < T; ++t) {
      spend.push_back({ep.factory_alloc[j][t], pd.factory_unit_cost.to_double()});
      spend.push_back({ep.eng_alloc[j][t], pd.eng_unit_cost.to_double()});
    }
    m.add_constraint(std::move(spend), Relation::LessEqual, static_cast<double>(budgets[j]), "budget[" + pd.id + "]");
    std::vector<CapacityRef> factory(T);
    std::vector<CapacityRef> eng(T);
    for (std::size_t t = 0; t < T; ++t) {
      factory[t].var = ep.factory_alloc[j][t];
      eng[t].var = ep.eng_alloc[j][t];
    }
    ep.blocks.push_back(
        append_pd_block(m, pd, instance.horizon, factory, eng, instance.factory_cap, pd.id + "."));
    auto c = cost_terms(pd, ep.blocks.back());
    objective.insert(objective.end(), c.begin(), c.end());
  }
  m.set_objective(std::move(objective), 0.0, mip::Sense::Minimize);
  return ep;
}

std::optional<JointSolution> solve_equilibrium(const Instance& instance, std::span<const std::int64_t> budgets,
                                               const LeaderAggregate& aggregate, const mip::Backend& backend,
                                               const mip::SolveLimits& limits) {
  const auto ep = build_equilibrium_problem(instance, budgets, aggregate);
  const auto sol = mip::solve(ep.model, limits, backend);
  if (sol.status == mip::SolveStatus::Infeasible) return std::nullopt;
  if (sol.status != mip::SolveStatus::Optimal) {
    throw FollowerSolveError(std::string("equilibrium problem: backend returned ") + mip::to_string(sol.status));
  }
  JointSolution joint;
  joint.leader = LeaderDecision::zero(instance);
  joint.leader.budget.assign(budgets.begin(), budgets.end());
  for (std::size_t j = 0; j < instance.pd_count(); ++j) {
    for (std::size_t t = 0; t < static_cast<std::size_t>(instance.horizon); ++t) {
      joint.leader.factory_alloc[j][t] = std::llround(sol.values[ep.factory_alloc[j][t]]);
      joint.leader.eng_alloc[j][t] = std::llround(sol.values[ep.eng_alloc[j][t]]);
    }
    joint.plans.push_back(extract_plan(instance.pds[j], ep.blocks[j], sol.values));
  }
  return joint;
}

bool check_equilibrium(const Instance& instance, std::span<const std::int64_t> budgets,
                       const LeaderAggregate& aggregate, const JointSolution& joint, const mip::Backend& backend) {
  const std::size_t J = instance.pd_count();
  const auto T = static_cast<std::size_t>(instance.horizon);
  if (budgets.size() != J || joint.plans.size() != J || joint.leader.factory_alloc.size() != J ||
      joint.leader.eng_alloc.size() != J) {
    throw CouplingViolation("check_equilibrium: expected one budget, plan and allocation per PD");
  }
  for (std::size_t t = 0; t < T; ++t) {
    std::int64_t f = 0;
    std::int64_t e = 0;
    for (std::size_t j = 0; j < J; ++j) {
      f += joint.leader.factory_alloc[j].at(t);
      e += joint.leader.eng_alloc[j].at(t);
    }
    if (f != aggregate.factory_total.at(t) || e != aggregate.eng_total.at(t)) {
      throw CouplingViolation("check_equilibrium: capacity shares do not sum to the aggregate in period " +
                              std::to_string(t + 1));
    }
  }
  for (std::size_t j = 0; j < J; ++j) {
    // With every rival share fixed, the couplings pin this PD's share.
    auto ctx = make_follower_context(instance, j, budgets[j], joint.leader.factory_alloc[j], joint.leader.eng_alloc[j]);
    if (allocation_cost(ctx.pd, ctx.factory_alloc, ctx.eng_alloc) > Money::from_units(budgets[j])) {
      throw CouplingViolation("check_equilibrium: share of PD " + ctx.pd.id + " exceeds its budget");
    }
    if (!plan_violations(ctx, joint.plans[j]).empty()) return false;
    const Money claimed = plan_cost(ctx.pd, joint.plans[j]);
    const auto best = solve_follower(ctx, backend);
    if (best.cost.to_double() < claimed.to_double() - 1e-6) return false;
  }
  return true;
}

}  // namespace prodtrans
