#include "prodtrans/master.hpp"

#include <cmath>

namespace prodtrans {

using mip::Relation;
using mip::Term;

std::vector<std::string> column_violations(const Instance& instance, const Column& column) {
  std::vector<std::string> out;
  const std::size_t J = instance.pd_count();
  const auto T = static_cast<std::size_t>(instance.horizon);
  if (column.budget_hat.size() != J || column.factory_hat.size() != J || column.eng_hat.size() != J ||
      column.cost_star.size() != J) {
    out.emplace_back("column must have one entry per PD");
    return out;
  }
  std::int64_t budget = 0;
  for (std::size_t j = 0; j < J; ++j) {
    if (column.factory_hat[j].size() != T || column.eng_hat[j].size() != T) {
      out.emplace_back("column allocation length differs from horizon");
      return out;
    }
    budget += column.budget_hat[j];
    if (column.cost_star[j] > big_m(instance, j)) out.push_back("cost of PD " + instance.pds[j].id + " exceeds big-M");
  }
  if (budget > instance.total_budget) out.emplace_back("column budget exceeds total budget");
  for (std::size_t t = 0; t < T; ++t) {
    std::int64_t f = 0;
    std::int64_t e = 0;
    for (std::size_t j = 0; j < J; ++j) {
      f += column.factory_hat[j][t];
      e += column.eng_hat[j][t];
    }
    if (f > instance.factory_cap[t]) out.push_back("column factory allocation exceeds capacity in period " + std::to_string(t + 1));
    if (e > instance.eng_cap[t]) out.push_back("column engineering allocation exceeds capacity in period " + std::to_string(t + 1));
  }
  return out;
}

const char* to_string(CutRule rule) { return rule == CutRule::Capacity ? "capacity" : "budget"; }

CutRule parse_cut_rule(const std::string& name) {
  if (name == "capacity") return CutRule::Capacity;
  if (name == "budget") return CutRule::Budget;
  throw std::invalid_argument("unknown cut rule '" + name + "' (expected capacity or budget)");
}

namespace {

// A plan never needs to produce more of a product than its total demand:
// trimming the surplus only removes ending inventory, which costs without
// earning. For new products the volume is tied to the launch indicators,
// which is much tighter than the per-period capacity gate in the relaxation.
void add_launch_volume_rows(mip::MipModel& m, const PDSpec& pd, const PdBlock& block) {
  for (std::size_t i = 0; i < pd.products.size(); ++i) {
    const auto& p = pd.products[i];
    std::int64_t total = 0;
    for (auto d : p.demand) total += d;
    const auto& x = block.production[i];
    if (!p.is_new) {
      std::vector<Term> sum;
      for (int v : x) sum.push_back({v, 1.0});
      m.add_constraint(std::move(sum), Relation::LessEqual, static_cast<double>(total), pd.id + ".volume[" + p.id + "]");
      continue;
    }
    std::vector<Term> prefix;
    for (std::size_t t = 0; t < x.size(); ++t) {
      prefix.push_back({x[t], 1.0});
      if (total != 0) prefix.push_back({block.dev_complete[i][t], -static_cast<double>(total)});
      m.add_constraint(prefix, Relation::LessEqual, 0.0,
                       pd.id + ".volume[" + p.id + "," + std::to_string(t + 1) + "]");
    }
  }
}

}  // namespace

MasterModel build_master(const Instance& instance, std::span<const Column> columns, CutRule rule) {
  const std::size_t J = instance.pd_count();
  const auto T = static_cast<std::size_t>(instance.horizon);
  const double total_budget = static_cast<double>(instance.total_budget);
  for (const auto& c : columns) {
    if (auto v = column_violations(instance, c); !v.empty()) throw std::invalid_argument("build_master: " + v.front());
  }

  MasterModel mm;
  auto& m = mm.model;
  for (std::size_t j = 0; j < J; ++j) mm.budget.push_back(m.add_integer("B[" + instance.pds[j].id + "]", 0, total_budget));
  mm.factory_alloc.assign(J, std::vector<int>(T));
  mm.eng_alloc.assign(J, std::vector<int>(T));
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t t = 0; t < T; ++t) {
      const std::string at = "[" + instance.pds[j].id + "," + std::to_string(t + 1) + "]";
      mm.factory_alloc[j][t] = m.add_integer("Rf" + at, 0, static_cast<double>(instance.factory_cap[t]));
      mm.eng_alloc[j][t] = m.add_integer("Re" + at, 0, static_cast<double>(instance.eng_cap[t]));
    }
  }
  // With the leader's allocation integral, each PD's plan is a flow problem.
  for (std::size_t j = 0; j < J; ++j) {
    m.set_branch_priority(mm.budget[j], 1);
    for (std::size_t t = 0; t < T; ++t) {
      m.set_branch_priority(mm.factory_alloc[j][t], 1);
      m.set_branch_priority(mm.eng_alloc[j][t], 1);
    }
  }

  std::vector<Term> budget_sum;
  for (int b : mm.budget) budget_sum.push_back({b, 1.0});
  m.add_constraint(std::move(budget_sum), Relation::LessEqual, total_budget, "total_budget");
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<Term> f;
    std::vector<Term> e;
    for (std::size_t j = 0; j < J; ++j) {
      f.push_back({mm.factory_alloc[j][t], 1.0});
      e.push_back({mm.eng_alloc[j][t], 1.0});
    }
    m.add_constraint(std::move(f), Relation::LessEqual, static_cast<double>(instance.factory_cap[t]),
                     "factory_cap[" + std::to_string(t + 1) + "]");
    m.add_constraint(std::move(e), Relation::LessEqual, static_cast<double>(instance.eng_cap[t]),
                     "eng_cap[" + std::to_string(t + 1) + "]");
  }

  std::vector<Term> objective;
  double constant = 0.0;
  std::vector<std::vector<Term>> phi(J);
  for (std::size_t j = 0; j < J; ++j) {
    const auto& pd = instance.pds[j];
    std::vector<Term> spend;
    for (std::size_t t = 0; t < T; ++t) {
      spend.push_back({mm.factory_alloc[j][t], pd.factory_unit_cost.to_double()});
      spend.push_back({mm.eng_alloc[j][t], pd.eng_unit_cost.to_double()});
    }
    spend.push_back({mm.budget[j], -1.0});
    m.add_constraint(std::move(spend), Relation::LessEqual, 0.0, "budget[" + pd.id + "]");

    std::vector<CapacityRef> factory(T);
    std::vector<CapacityRef> eng(T);
    for (std::size_t t = 0; t < T; ++t) {
      factory[t].var = mm.factory_alloc[j][t];
      eng[t].var = mm.eng_alloc[j][t];
    }
    mm.blocks.push_back(append_pd_block(m, pd, instance.horizon, factory, eng, instance.factory_cap, pd.id + "."));
    add_launch_volume_rows(m, pd, mm.blocks.back());
    double c = 0.0;
    auto revenue = revenue_terms(pd, mm.blocks.back(), c);
    constant += c;
    objective.insert(objective.end(), revenue.begin(), revenue.end());
    phi[j] = cost_terms(pd, mm.blocks.back());
    for (const auto& term : phi[j]) objective.push_back({term.var, -term.coef});
  }
  m.set_objective(std::move(objective), constant, mip::Sense::Maximize);

  for (std::size_t g = 0; g < columns.size(); ++g) {
    const auto& col = columns[g];
    const std::string gs = std::to_string(g);
    std::vector<int> alpha(J);
    for (std::size_t j = 0; j < J; ++j) alpha[j] = m.add_binary("alpha[" + gs + "," + instance.pds[j].id + "]");
    for (std::size_t j = 0; j < J; ++j) {
      const std::string at = "[" + gs + "," + instance.pds[j].id + "]";
      // Capacity at least the column's unless alpha releases the cut.
      for (std::size_t t = 0; t < T; ++t) {
        const auto rf = static_cast<double>(col.factory_hat[j][t]);
        if (rf > 0) {
          m.add_constraint({{mm.factory_alloc[j][t], 1.0}, {alpha[j], rf}}, Relation::GreaterEqual, rf,
                           "cover_f" + at + std::to_string(t + 1));
        }
        const auto re = static_cast<double>(col.eng_hat[j][t]);
        if (re > 0) {
          m.add_constraint({{mm.eng_alloc[j][t], 1.0}, {alpha[j], re}}, Relation::GreaterEqual, re,
                           "cover_e" + at + std::to_string(t + 1));
        }
      }
      // Optimality cut: phi_j <= phi*_gj unless alpha releases it.
      std::vector<Term> cut = phi[j];
      const double bm = big_m(instance, j).to_double();
      if (bm != 0.0) cut.push_back({alpha[j], -bm});
      m.add_constraint(std::move(cut), Relation::LessEqual, col.cost_star[j].to_double(), "opt" + at);
    }
    mm.alpha.push_back(alpha);

    if (rule == CutRule::Capacity) {
      std::vector<std::vector<int>> drops(J);
      for (std::size_t j = 0; j < J; ++j) {
        const std::string at = "[" + gs + "," + instance.pds[j].id + ",";
        std::vector<Term> release = {{alpha[j], 1.0}};
        auto add_drop = [&](int alloc, std::int64_t hat, std::int64_t cap, const std::string& name) {
          if (hat <= 0) return;
          // w = 1 forces alloc <= hat - 1
          const int w = m.add_binary(name);
          m.add_constraint({{alloc, 1.0}, {w, static_cast<double>(cap - hat + 1)}}, Relation::LessEqual,
                           static_cast<double>(cap), name);
          release.push_back({w, -1.0});
          drops[j].push_back(w);
        };
        for (std::size_t t = 0; t < T; ++t) {
          add_drop(mm.factory_alloc[j][t], col.factory_hat[j][t], instance.factory_cap[t],
                   "drop_f" + at + std::to_string(t + 1) + "]");
          add_drop(mm.eng_alloc[j][t], col.eng_hat[j][t], instance.eng_cap[t],
                   "drop_e" + at + std::to_string(t + 1) + "]");
        }
        m.add_constraint(std::move(release), Relation::LessEqual, 0.0, "release" + at.substr(0, at.size() - 1) + "]");
      }
      mm.delta.emplace_back();
      mm.sign.emplace_back();
      mm.drop.push_back(std::move(drops));
      continue;
    }

    std::vector<int> delta(J);
    std::vector<int> sign(J);
    for (std::size_t j = 0; j < J; ++j) {
      const std::string at = "[" + gs + "," + instance.pds[j].id + "]";
      delta[j] = m.add_integer("delta" + at, 0, total_budget);
      sign[j] = m.add_binary("y" + at);
    }
    std::vector<Term> moved;
    for (std::size_t j = 0; j < J; ++j) {
      const std::string at = "[" + gs + "," + instance.pds[j].id + "]";
      // delta = |B_j - B_hat| through a sign split.
      const auto bh = static_cast<double>(col.budget_hat[j]);
      const double big = 2.0 * total_budget;
      m.add_constraint({{delta[j], 1.0}, {mm.budget[j], -1.0}}, Relation::GreaterEqual, -bh, "abs_lo1" + at);
      m.add_constraint({{delta[j], 1.0}, {mm.budget[j], 1.0}}, Relation::GreaterEqual, bh, "abs_lo2" + at);
      m.add_constraint({{delta[j], 1.0}, {mm.budget[j], -1.0}, {sign[j], big}}, Relation::LessEqual, big - bh,
                       "abs_hi1" + at);
      m.add_constraint({{delta[j], 1.0}, {mm.budget[j], 1.0}, {sign[j], -big}}, Relation::LessEqual, bh,
                       "abs_hi2" + at);
      moved.push_back({delta[j], static_cast<double>(J)});
      moved.push_back({alpha[j], -1.0});
    }
    // J * sum delta >= sum alpha, i.e. any released cut forces a new budget.
    m.add_constraint(std::move(moved), Relation::GreaterEqual, 0.0, "distinct[" + gs + "]");
    mm.delta.push_back(std::move(delta));
    mm.sign.push_back(std::move(sign));
    mm.drop.emplace_back();
  }
  return mm;
}

MasterSolution solve_master(const Instance& instance, const MasterModel& master, const mip::Backend& backend,
                            const mip::SolveLimits& limits) {
  const auto sol = mip::solve(master.model, limits, backend);
  MasterSolution out;
  out.status = sol.status;
  out.bound = sol.bound;
  if (!sol.has_solution) return out;
  out.has_solution = true;
  const std::size_t J = instance.pd_count();
  const auto T = static_cast<std::size_t>(instance.horizon);
  auto value = [&](int var) { return std::llround(sol.values[static_cast<std::size_t>(var)]); };
  out.leader = LeaderDecision::zero(instance);
  for (std::size_t j = 0; j < J; ++j) {
    out.leader.budget[j] = value(master.budget[j]);
    for (std::size_t t = 0; t < T; ++t) {
      out.leader.factory_alloc[j][t] = value(master.factory_alloc[j][t]);
      out.leader.eng_alloc[j][t] = value(master.eng_alloc[j][t]);
    }
    out.plans.push_back(extract_plan(instance.pds[j], master.blocks[j], sol.values));
    out.phi.push_back(out.plans.back().cost);
  }
  auto read = [&](const std::vector<std::vector<int>>& vars) {
    std::vector<std::vector<int>> r;
    for (const auto& row : vars) {
      std::vector<int> v;
      for (int var : row) v.push_back(static_cast<int>(value(var)));
      r.push_back(std::move(v));
    }
    return r;
  };
  out.alphas = read(master.alpha);
  out.deltas = read(master.delta);
  out.signs = read(master.sign);
  out.objective = leader_objective(instance, out.plans);
  return out;
}

}  // namespace prodtrans
