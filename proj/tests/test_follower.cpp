#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "plan_enumerator.hpp"
#include "prodtrans/follower.hpp"

using namespace prodtrans;
using namespace prodtrans::testing;

namespace {

const mip::Backend& reference() {
  static const auto backend = mip::make_backend("reference");
  return *backend;
}
const mip::Backend& bnb() {
  static const auto backend = mip::make_backend("bnb");
  return *backend;
}

FollowerContext ctx_for(const Instance& inst, std::size_t j, std::int64_t budget, Quantities rf, Quantities re) {
  return make_follower_context(inst, j, budget, std::move(rf), std::move(re));
}

/// Random allocation of the instance's capacity with budget covering it.
LeaderDecision random_leader(const Instance& inst, std::mt19937_64& rng) {
  auto leader = LeaderDecision::zero(inst);
  for (std::size_t t = 0; t < static_cast<std::size_t>(inst.horizon); ++t) {
    const auto f0 = std::uniform_int_distribution<std::int64_t>(0, inst.factory_cap[t])(rng);
    const auto e0 = std::uniform_int_distribution<std::int64_t>(0, inst.eng_cap[t])(rng);
    leader.factory_alloc[0][t] = f0;
    leader.factory_alloc[1][t] = std::uniform_int_distribution<std::int64_t>(0, inst.factory_cap[t] - f0)(rng);
    leader.eng_alloc[0][t] = e0;
    leader.eng_alloc[1][t] = std::uniform_int_distribution<std::int64_t>(0, inst.eng_cap[t] - e0)(rng);
  }
  for (std::size_t j = 0; j < 2; ++j) {
    leader.budget[j] = allocation_cost(inst.pds[j], leader.factory_alloc[j], leader.eng_alloc[j]).units();
  }
  return leader;
}

}  // namespace

TEST_CASE("zero demand gives the empty plan") {
  const auto inst = zero_demand_instance();
  for (const auto* backend : {&reference(), &bnb()}) {
    const auto plan = solve_follower(ctx_for(inst, 0, 0, {0, 0}, {0, 0}), *backend);
    CHECK(plan.cost == Money{});
    CHECK(plan == FollowerSolution::do_nothing(inst.pds[0], 2));
  }
}

TEST_CASE("single current product: producing beats backordering") {
  const auto inst = instance(1, {pd("A", {product("p", "A", {5})})}, {5}, {0}, 10);
  const auto ctx = ctx_for(inst, 0, 10, {5}, {0});
  for (const auto* backend : {&reference(), &bnb()}) {
    const auto plan = solve_follower(ctx, *backend);
    CHECK(plan.production[0][0] == 5);
    CHECK(plan.backorder[0][0] == 0);
    CHECK(plan.cost == Money::from_units(10));
  }
  CHECK(enumerate_follower(ctx).cost == Money::from_units(10));
}

TEST_CASE("new product is developed before it is produced") {
  const auto inst = instance(2, {pd("A", {new_product("p", "A", {0, 4}, 2, 1)})}, {4, 4}, {1, 1}, 100);
  const auto ctx = ctx_for(inst, 0, 100, {2, 4}, {1, 0});
  for (const auto* backend : {&reference(), &bnb()}) {
    const auto plan = solve_follower(ctx, *backend);
    CHECK(plan.dev_complete[0] == Quantities{1, 0});
    CHECK(plan.production[0] == Quantities{0, 4});
    CHECK(plan.cost == Money::from_units(8));
  }
  CHECK(enumerate_follower(ctx).cost == Money::from_units(8));
}

TEST_CASE("budget-infeasible allocation is signalled separately") {
  const auto inst = two_pd_instance();
  const auto ctx = ctx_for(inst, 0, 3, {2, 2}, {0, 0});
  CHECK_THROWS_AS(build_follower_model(ctx), BudgetInfeasibleError);
  CHECK_THROWS_AS(solve_follower(ctx, reference()), BudgetInfeasibleError);
}

TEST_CASE("follower optimum matches plan enumeration on random allocations") {
  std::mt19937_64 rng(5);
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto inst = random_tiny_instance(seed);
    const auto leader = random_leader(inst, rng);
    for (std::size_t j = 0; j < 2; ++j) {
      CAPTURE(seed);
      CAPTURE(j);
      const auto ctx = make_follower_context(inst, j, leader);
      const auto expected = enumerate_follower(ctx);
      const auto ref = solve_follower(ctx, reference());
      const auto fast = solve_follower(ctx, bnb());
      CHECK(ref.cost == expected.cost);
      CHECK(fast.cost == expected.cost);
      CHECK(plan_violations(ctx, ref).empty());
      CHECK(plan_violations(ctx, fast).empty());
      CHECK(ref.cost <= big_m(inst, j));

      const auto opt = optimistic_resolve(ctx, ref.cost, reference());
      CHECK(opt.cost == expected.cost);
      CHECK(pd_revenue(ctx.pd, opt.backorder) == expected.best_revenue);
      const auto opt_fast = optimistic_resolve(ctx, ref.cost, bnb());
      CHECK(pd_revenue(ctx.pd, opt_fast.backorder) == expected.best_revenue);
    }
  }
}

TEST_CASE("plans conserve stock and respect development gating") {
  std::mt19937_64 rng(8);
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    const auto inst = random_tiny_instance(seed, 3, 2);
    const auto leader = random_leader(inst, rng);
    for (std::size_t j = 0; j < 2; ++j) {
      const auto ctx = make_follower_context(inst, j, leader);
      const auto plan = solve_follower(ctx, bnb());
      const auto& pd = inst.pds[j];
      for (std::size_t n = 0; n < pd.products.size(); ++n) {
        std::int64_t done = 0;
        for (std::size_t t = 0; t < 3; ++t) {
          const std::int64_t prev_i = t ? plan.inventory[n][t - 1] : 0;
          const std::int64_t prev_v = t ? plan.backorder[n][t - 1] : 0;
          CHECK(plan.inventory[n][t] - prev_i - plan.production[n][t] + pd.products[n].demand[t] + prev_v -
                    plan.backorder[n][t] ==
                0);
          done += plan.dev_complete[n][t];
          if (pd.products[n].is_new && done == 0) CHECK(plan.production[n][t] == 0);
        }
      }
    }
  }
}

TEST_CASE("more capacity never raises the follower cost") {
  std::mt19937_64 rng(21);
  for (std::uint64_t seed = 200; seed < 230; ++seed) {
    const auto inst = random_tiny_instance(seed);
    const auto leader = random_leader(inst, rng);
    const std::size_t j = seed % 2;
    auto ctx = make_follower_context(inst, j, leader);
    const auto before = solve_follower(ctx, bnb());
    const auto t = static_cast<std::size_t>(rng() % 2);
    if (rng() % 2) {
      ctx.factory_alloc[t] += 1;
    } else {
      ctx.eng_alloc[t] += 1;
    }
    ctx.budget = allocation_cost(ctx.pd, ctx.factory_alloc, ctx.eng_alloc).units();
    const auto after = solve_follower(ctx, bnb());
    CHECK(after.cost <= before.cost);
  }
}

TEST_CASE("optimism prefers the earlier delivery among cost-tied plans") {
  // Producing 2 units in period 1 costs 2*12; backordering them and producing
  // in period 2 costs 2*10 + 2*2. Both cost 24, but serving early earns more.
  auto p = product("p", "A", {2, 0});
  p.prod_cost = {Money::from_units(12), Money::from_units(2)};
  p.revenue = {Money::from_units(30), Money::from_units(20)};
  const auto inst = instance(2, {pd("A", {p})}, {2, 2}, {0, 0}, 10);
  const auto ctx = ctx_for(inst, 0, 4, {2, 2}, {0, 0});
  const auto expected = enumerate_follower(ctx);
  REQUIRE(expected.optimal_plans >= 2);
  REQUIRE(expected.cost == Money::from_units(24));
  for (const auto* backend : {&reference(), &bnb()}) {
    const auto plan = optimistic_resolve(ctx, expected.cost, *backend);
    CHECK(plan.backorder[0][0] == 0);
    CHECK(pd_revenue(ctx.pd, plan.backorder) == expected.best_revenue);
  }
  CHECK_THROWS_AS(optimistic_resolve(ctx, Money::from_units(1), reference()), std::logic_error);
}

TEST_CASE("single-PD equilibrium equals the pinned follower problem") {
  const auto inst = instance(2, {pd("A", {product("a", "A", {3, 2}), new_product("b", "A", {0, 3}, 2, 1)})}, {4, 5},
                             {1, 1}, 20);
  const std::vector<std::int64_t> budgets = {20};
  const LeaderAggregate agg{{4, 5}, {1, 1}};
  const auto joint = solve_equilibrium(inst, budgets, agg, reference());
  REQUIRE(joint);
  const auto direct = solve_follower(ctx_for(inst, 0, 20, {4, 5}, {1, 1}), reference());
  CHECK(joint->plans[0].cost == direct.cost);
  CHECK(joint->leader.factory_alloc[0] == Quantities{4, 5});
}

TEST_CASE("zero-demand equilibrium costs nothing") {
  const auto inst = zero_demand_instance();
  const std::vector<std::int64_t> budgets = {2, 2};
  const LeaderAggregate agg{{1, 1}, {1, 0}};
  const auto joint = solve_equilibrium(inst, budgets, agg, bnb());
  REQUIRE(joint);
  CHECK(joint->plans[0].cost + joint->plans[1].cost == Money{});
  CHECK(check_equilibrium(inst, budgets, agg, *joint, bnb()));
}

TEST_CASE("equilibrium optimum equals the best enumerated split") {
  for (std::uint64_t seed = 300; seed < 312; ++seed) {
    CAPTURE(seed);
    const auto inst = random_tiny_instance(seed);
    const std::vector<std::int64_t> budgets = {6, 7};
    const LeaderAggregate agg{{std::min<std::int64_t>(inst.factory_cap[0], 3), std::min<std::int64_t>(inst.factory_cap[1], 3)},
                              {1, 1}};
    // Enumerate every split of the aggregate between the two PDs.
    bool any = false;
    Money best;
    for (std::int64_t f0 = 0; f0 <= agg.factory_total[0]; ++f0) {
      for (std::int64_t f1 = 0; f1 <= agg.factory_total[1]; ++f1) {
        for (std::int64_t e0 = 0; e0 <= 1; ++e0) {
          for (std::int64_t e1 = 0; e1 <= 1; ++e1) {
            const Quantities ra = {f0, f1};
            const Quantities rb = {agg.factory_total[0] - f0, agg.factory_total[1] - f1};
            const Quantities ea = {e0, e1};
            const Quantities eb = {1 - e0, 1 - e1};
            if (allocation_cost(inst.pds[0], ra, ea) > Money::from_units(budgets[0]) ||
                allocation_cost(inst.pds[1], rb, eb) > Money::from_units(budgets[1])) {
              continue;
            }
            const Money total = enumerate_follower(ctx_for(inst, 0, budgets[0], ra, ea)).cost +
                                enumerate_follower(ctx_for(inst, 1, budgets[1], rb, eb)).cost;
            if (!any || total < best) best = total;
            any = true;
          }
        }
      }
    }
    const auto joint = solve_equilibrium(inst, budgets, agg, bnb());
    REQUIRE(joint.has_value() == any);
    if (!any) continue;
    CHECK(joint->plans[0].cost + joint->plans[1].cost == best);
    CHECK(check_equilibrium(inst, budgets, agg, *joint, bnb()));
  }
}

TEST_CASE("any feasible split with best responses is an equilibrium") {
  std::mt19937_64 rng(33);
  for (std::uint64_t seed = 400; seed < 420; ++seed) {
    const auto inst = random_tiny_instance(seed);
    const auto leader = random_leader(inst, rng);
    const auto agg = LeaderAggregate::from_allocation(leader, inst.horizon);
    JointSolution joint{leader, {}};
    for (std::size_t j = 0; j < 2; ++j) joint.plans.push_back(solve_follower(make_follower_context(inst, j, leader), bnb()));
    CHECK(check_equilibrium(inst, leader.budget, agg, joint, reference()));

    // A strictly costlier plan: one unit of production nobody needs, held to the horizon.
    bool corrupted = false;
    for (std::size_t j = 0; j < 2 && !corrupted; ++j) {
      const auto& pd = inst.pds[j];
      for (std::size_t n = 0; n < pd.products.size() && !corrupted; ++n) {
        if (pd.products[n].is_new) continue;
        for (std::size_t t = 0; t < 2 && !corrupted; ++t) {
          std::int64_t used = 0;
          for (std::size_t k = 0; k < pd.products.size(); ++k) {
            used += joint.plans[j].production[k][t] + pd.products[k].dev_factory_req * joint.plans[j].dev_complete[k][t];
          }
          if (used >= leader.factory_alloc[j][t]) continue;
          auto bad = joint;
          bad.plans[j].production[n][t] += 1;
          for (std::size_t u = t; u < 2; ++u) bad.plans[j].inventory[n][u] += 1;
          bad.plans[j].cost = plan_cost(pd, bad.plans[j]);
          CHECK_FALSE(check_equilibrium(inst, leader.budget, agg, bad, reference()));
          corrupted = true;
        }
      }
    }
  }
}

TEST_CASE("broken couplings raise instead of returning false") {
  const auto inst = two_pd_instance();
  auto leader = LeaderDecision::zero(inst);
  leader.budget = {6, 6};
  leader.factory_alloc = {{1, 1}, {1, 1}};
  JointSolution joint{leader, {}};
  for (std::size_t j = 0; j < 2; ++j) joint.plans.push_back(solve_follower(make_follower_context(inst, j, leader), bnb()));
  const LeaderAggregate wrong{{3, 2}, {0, 0}};
  CHECK_THROWS_AS(check_equilibrium(inst, leader.budget, wrong, joint, bnb()), CouplingViolation);
}
