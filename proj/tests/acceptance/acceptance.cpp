// Prints one PASS/FAIL line per acceptance criterion.
//
//   acceptance [--only N]... [--expect-fail N]... [--workers K]
//
// The exit status is 0 when every criterion that ran came out as expected:
// PASS, or FAIL for the ones named by --expect-fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fixtures.hpp"
#include "generator_checks.hpp"
#include "prodtrans/ccg.hpp"
#include "prodtrans/experiments.hpp"
#include "prodtrans/follower.hpp"
#include "prodtrans/generator.hpp"
#include "prodtrans/instance_io.hpp"
#include "prodtrans/oracle.hpp"
#include "random_ip.hpp"

using namespace prodtrans;
using namespace prodtrans::testing;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

const mip::Backend& reference() {
  static const auto backend = mip::make_backend("reference");
  return *backend;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 1) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

/// Every CCG run of the session, for the termination criterion.
struct RunRecord {
  std::string label;
  int iterations = 0;
  std::size_t distinct_budgets = 0;
  std::int64_t total_budget = 0;
  int n_pds = 0;
  bool duplicate_column = false;
};
std::vector<RunRecord> g_runs;

void record(const std::string& label, const Instance& inst, const CcgResult& res) {
  g_runs.push_back({label, res.iterations, res.distinct_budgets, inst.total_budget, static_cast<int>(inst.pd_count()),
                    false});
  std::set<std::pair<Quantities, std::pair<QuantityTable, QuantityTable>>> seen;
  for (const auto& c : res.columns) {
    if (!seen.insert({c.budget_hat, {c.factory_hat, c.eng_hat}}).second) g_runs.back().duplicate_column = true;
  }
}

// ---------------------------------------------------------------------------
// Tiny oracle set shared by criteria 1, 2 and 4.

struct TinyCase {
  std::string label;
  Instance instance;
  bool generated = false;
};

struct TinyRun {
  TinyCase tc;
  Money oracle;
  CcgResult result;
  bool threw = false;
  std::string error;
};

std::vector<TinyCase> tiny_cases() {
  std::vector<TinyCase> out;
  for (int T : {2, 3}) {
    for (int N : {2, 3}) {
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto inst = generate_instance({T, 2, N, 1, 0.4, seed});
        clamp_instance(inst, 6, 3, 8);
        out.push_back({"T" + std::to_string(T) + "N" + std::to_string(N) + "s" + std::to_string(seed), inst, true});
      }
    }
  }
  // Stress set: costs drawn so that the PDs' and the leader's interests
  // conflict, which forces several CCG iterations.
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    out.push_back({"conflict" + std::to_string(seed), conflicting_cost_instance(seed), false});
  }
  return out;
}

double g_tiny_seconds = 0.0;

const std::vector<TinyRun>& tiny_runs() {
  static const std::vector<TinyRun> runs = [] {
    const auto t0 = Clock::now();
    std::vector<TinyRun> out;
    for (auto& tc : tiny_cases()) {
      TinyRun r{tc, {}, {}, false, {}};
      r.oracle = brute_force_bilevel(tc.instance).objective;
      CcgParams p;
      p.parallel = false;
      try {
        r.result = run_ccg(tc.instance, p);
        record(tc.label, tc.instance, r.result);
      } catch (const DuplicateColumnError& e) {
        r.threw = true;
        r.error = e.what();
        g_runs.push_back({tc.label, 0, 0, tc.instance.total_budget, static_cast<int>(tc.instance.pd_count()), true});
      } catch (const std::exception& e) {
        r.threw = true;
        r.error = e.what();
      }
      out.push_back(std::move(r));
    }
    g_tiny_seconds = seconds_since(t0);
    return out;
  }();
  return runs;
}

Outcome oracle_equivalence() {
  const auto& runs = tiny_runs();
  int generated = 0, matched = 0, total = 0;
  std::string first_miss;
  for (const auto& r : runs) {
    ++total;
    generated += r.tc.generated;
    const bool ok = !r.threw && r.result.status == CcgStatus::Optimal &&
                    std::fabs(r.result.objective.to_double() - r.oracle.to_double()) <= 1e-6;
    matched += ok;
    if (!ok && first_miss.empty()) {
      first_miss = r.tc.label + (r.threw ? " threw " + r.error
                                         : " got " + std::string(to_string(r.result.status)) + " " +
                                               fmt(r.result.objective.to_double(), 0) + " vs " +
                                               fmt(r.oracle.to_double(), 0));
    }
  }
  Outcome o;
  o.pass = matched == total && generated >= 20 && g_tiny_seconds <= 600.0;
  o.detail = std::to_string(matched) + "/" + std::to_string(total) + " match the oracle (" +
             std::to_string(generated) + " generated and clamped, " + std::to_string(total - generated) +
             " conflicting-cost), " + fmt(g_tiny_seconds) + " s";
  if (!first_miss.empty()) o.detail += "; first miss " + first_miss;
  return o;
}

Outcome follower_certificate() {
  int checked = 0, ok = 0;
  double worst = 0.0;
  for (const auto& r : tiny_runs()) {
    if (r.threw || r.result.status != CcgStatus::Optimal) continue;
    for (std::size_t j = 0; j < r.tc.instance.pd_count(); ++j) {
      const auto plan = solve_follower(make_follower_context(r.tc.instance, j, r.result.leader), reference());
      const double diff = std::fabs(plan.cost.to_double() - r.result.plans[j].cost.to_double());
      worst = std::max(worst, diff);
      ++checked;
      ok += diff <= 1e-6;
    }
  }
  return {checked > 0 && ok == checked, std::to_string(ok) + "/" + std::to_string(checked) +
                                            " PD re-solves within 1e-6 of the reported cost (worst " +
                                            fmt(worst, 9) + ")"};
}

Outcome bound_validity() {
  int iterations = 0, bad = 0;
  std::string first;
  for (const auto& r : tiny_runs()) {
    if (r.threw) continue;
    const double opt = r.oracle.to_double();
    const auto& tr = r.result.trace;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      ++iterations;
      bool ok = tr[k].incumbent_bound <= opt + 1e-6 && opt <= tr[k].relaxation_bound + 1e-6;
      if (k > 0) {
        ok = ok && tr[k].relaxation_bound <= tr[k - 1].relaxation_bound + 1e-6 &&
             tr[k].incumbent_bound >= tr[k - 1].incumbent_bound - 1e-6;
      }
      if (!ok) {
        ++bad;
        if (first.empty()) first = r.tc.label + " iteration " + std::to_string(k + 1);
      }
    }
  }
  Outcome o{bad == 0 && iterations > 0, std::to_string(iterations - bad) + "/" + std::to_string(iterations) +
                                            " iterations keep incumbent <= oracle <= relaxation with monotone bounds"};
  if (!first.empty()) o.detail += "; first violation " + first;
  return o;
}

// ---------------------------------------------------------------------------

Outcome pseudo_nash() {
  std::mt19937_64 rng(2024);
  int points = 0, ep_ok = 0, alt_total = 0, alt_ok = 0, corrupt_total = 0, corrupt_caught = 0;
  int coupling_total = 0, coupling_caught = 0;
  for (std::uint64_t seed = 1; points < 12 && seed <= 200; ++seed) {
    auto inst = generate_instance({2, 2, 2, 1, 0.4, seed});
    clamp_instance(inst, 6, 3, 8);
    const auto T = static_cast<std::size_t>(inst.horizon);
    // random aggregate S and budgets B that can pay for at least one split
    LeaderAggregate agg{Quantities(T), Quantities(T)};
    for (std::size_t t = 0; t < T; ++t) {
      agg.factory_total[t] = std::uniform_int_distribution<std::int64_t>(0, inst.factory_cap[t])(rng);
      agg.eng_total[t] = std::uniform_int_distribution<std::int64_t>(0, inst.eng_cap[t])(rng);
    }
    auto split = [&](std::mt19937_64& g) {
      auto leader = LeaderDecision::zero(inst);
      for (std::size_t t = 0; t < T; ++t) {
        const auto f0 = std::uniform_int_distribution<std::int64_t>(0, agg.factory_total[t])(g);
        const auto e0 = std::uniform_int_distribution<std::int64_t>(0, agg.eng_total[t])(g);
        leader.factory_alloc[0][t] = f0;
        leader.factory_alloc[1][t] = agg.factory_total[t] - f0;
        leader.eng_alloc[0][t] = e0;
        leader.eng_alloc[1][t] = agg.eng_total[t] - e0;
      }
      return leader;
    };
    auto base = split(rng);
    std::vector<std::int64_t> budgets(2);
    for (std::size_t j = 0; j < 2; ++j) {
      budgets[j] = allocation_cost(inst.pds[j], base.factory_alloc[j], base.eng_alloc[j]).units() +
                   std::uniform_int_distribution<std::int64_t>(0, 40)(rng);
    }
    const auto joint = solve_equilibrium(inst, budgets, agg, reference());
    if (!joint) continue;
    ++points;
    ep_ok += check_equilibrium(inst, budgets, agg, *joint, reference());

    // alternative splits of the same S, each PD answering optimally
    int found = 0;
    for (int attempt = 0; attempt < 2000 && found < 3; ++attempt) {
      auto leader = split(rng);
      bool affordable = true;
      for (std::size_t j = 0; j < 2; ++j) {
        affordable = affordable &&
                     allocation_cost(inst.pds[j], leader.factory_alloc[j], leader.eng_alloc[j]).units() <= budgets[j];
      }
      if (!affordable) continue;
      leader.budget = budgets;
      JointSolution alt{leader, {}};
      for (std::size_t j = 0; j < 2; ++j) {
        alt.plans.push_back(solve_follower(make_follower_context(inst, j, leader), reference()));
      }
      ++found;
      ++alt_total;
      alt_ok += check_equilibrium(inst, budgets, agg, alt, reference());
    }

    // corruption 1: a strictly costlier plan (one surplus unit held to the horizon)
    for (std::size_t j = 0; j < 2; ++j) {
      const auto& pd = inst.pds[j];
      bool done = false;
      for (std::size_t n = 0; n < pd.products.size() && !done; ++n) {
        if (pd.products[n].is_new) continue;
        for (std::size_t t = 0; t < T && !done; ++t) {
          std::int64_t used = 0;
          for (std::size_t k = 0; k < pd.products.size(); ++k) {
            used += joint->plans[j].production[k][t] + pd.products[k].dev_factory_req * joint->plans[j].dev_complete[k][t];
          }
          if (used >= joint->leader.factory_alloc[j][t]) continue;
          auto bad = *joint;
          bad.plans[j].production[n][t] += 1;
          for (std::size_t u = t; u < T; ++u) bad.plans[j].inventory[n][u] += 1;
          bad.plans[j].cost = plan_cost(pd, bad.plans[j]);
          if (bad.plans[j].cost == joint->plans[j].cost) continue;
          ++corrupt_total;
          corrupt_caught += !check_equilibrium(inst, budgets, agg, bad, reference());
          done = true;
        }
      }
      // or one unit less, the shortfall carried to the horizon
      for (std::size_t n = 0; n < pd.products.size() && !done; ++n) {
        for (std::size_t t = 0; t < T && !done; ++t) {
          if (joint->plans[j].production[n][t] == 0) continue;
          auto bad = *joint;
          auto& plan = bad.plans[j];
          plan.production[n][t] -= 1;
          for (std::size_t u = t; u < T; ++u) {
            if (plan.inventory[n][u] > 0) {
              plan.inventory[n][u] -= 1;
            } else {
              plan.backorder[n][u] += 1;
            }
          }
          plan.cost = plan_cost(pd, plan);
          if (plan.cost <= joint->plans[j].cost) continue;
          ++corrupt_total;
          corrupt_caught += !check_equilibrium(inst, budgets, agg, bad, reference());
          done = true;
        }
      }
    }
    // corruption 2: shares that no longer sum to S
    {
      auto bad = *joint;
      bad.leader.factory_alloc[0][0] += 1;
      ++coupling_total;
      try {
        check_equilibrium(inst, budgets, agg, bad, reference());
      } catch (const CouplingViolation&) {
        ++coupling_caught;
      }
    }
  }
  const bool pass = points >= 10 && ep_ok == points && alt_total >= 3 * points && alt_ok == alt_total &&
                    corrupt_total > 0 && corrupt_caught == corrupt_total && coupling_caught == coupling_total;
  return {pass, std::to_string(points) + " (B,S) points: EP optimum " + std::to_string(ep_ok) + "/" +
                    std::to_string(points) + ", alternative splits " + std::to_string(alt_ok) + "/" +
                    std::to_string(alt_total) + ", costlier plans rejected " + std::to_string(corrupt_caught) + "/" +
                    std::to_string(corrupt_total) + ", broken couplings rejected " + std::to_string(coupling_caught) +
                    "/" + std::to_string(coupling_total)};
}

// ---------------------------------------------------------------------------

std::uint64_t enumerate_compositions(std::int64_t total, int parts) {
  if (parts == 1) return 1;
  std::uint64_t n = 0;
  for (std::int64_t first = 0; first <= total; ++first) n += enumerate_compositions(total - first, parts - 1);
  return n;
}

Outcome weak_compositions() {
  int checked = 0, ok = 0;
  for (std::int64_t b = 0; b <= 10; ++b) {
    for (int j = 1; j <= 4; ++j) {
      ++checked;
      ok += weak_composition_count(b, j) == enumerate_compositions(b, j);
    }
  }
  const bool spots = weak_composition_count(4, 2) == 5 && weak_composition_count(5, 3) == 21;
  return {ok == checked && spots, std::to_string(ok) + "/" + std::to_string(checked) +
                                      " (budget, parts) pairs equal enumeration; f(4,2)=" +
                                      std::to_string(weak_composition_count(4, 2)) +
                                      ", f(5,3)=" + std::to_string(weak_composition_count(5, 3))};
}

// ---------------------------------------------------------------------------

unsigned g_workers = std::max(1u, std::thread::hardware_concurrency() / 2);

std::vector<ExperimentRow> run_recorded(const std::vector<RunSpec>& specs, const CcgParams& params) {
  PoolOptions opts;
  opts.workers = g_workers;
  auto rows = run_pool(specs, params, opts);
  for (const auto& row : rows) {
    if (row.status == "error") {
      if (row.error.find("repeated an existing column") != std::string::npos) {
        g_runs.push_back({row.class_id, row.iterations, row.distinct_budgets, 0, row.n_pds, true});
      }
      continue;
    }
    g_runs.push_back({row.class_id + " seed " + std::to_string(row.seed), row.iterations, row.distinct_budgets,
                      row.total_budget, row.n_pds, false});
  }
  return rows;
}

Outcome budget_plateau() {
  const auto t0 = Clock::now();
  CcgParams p;
  p.total_time_limit = 600;
  p.master_time_limit = 300;
  const auto rows = run_recorded(budget_study_specs({6, 3, 4, 2, 0.4, 1}, {1}), p);
  std::ostringstream line;
  bool all_optimal = true;
  std::vector<double> obj;
  for (const auto& r : rows) {
    line << " " << format_double(r.budget_fraction) << ":";
    if (r.objective) {
      line << fmt(r.objective->to_double(), 0);
      obj.push_back(r.objective->to_double());
    } else {
      line << "none";
    }
    if (r.status != "optimal") {
      all_optimal = false;
      line << "(" << r.status << ")";
    }
  }
  bool monotone = obj.size() == rows.size();
  for (std::size_t k = 1; monotone && k < obj.size(); ++k) monotone = obj[k] >= obj[k - 1] - 1e-6;
  // first index from which every later neighbour pair is equal
  std::size_t plateau = obj.empty() ? 0 : obj.size() - 1;
  while (plateau > 0 && std::fabs(obj[plateau] - obj[plateau - 1]) < 1e-6) --plateau;
  const bool has_plateau = !obj.empty() && plateau + 1 < obj.size();
  std::string detail = "T=6 J=3 N=4 P=2 seed 1, objectives" + line.str();
  if (has_plateau) detail += "; plateau from Bc=" + format_double(rows[plateau].budget_fraction);
  detail += "; " + fmt(seconds_since(t0)) + " s";
  return {all_optimal && monotone && has_plateau && seconds_since(t0) <= 1800.0, detail};
}

Outcome competition_trend() {
  const auto t0 = Clock::now();
  std::vector<RunSpec> specs;
  for (const auto& s : competition_study_specs(3, {1, 2, 3, 4, 5})) {
    if (s.config.n_pds == 6 || s.config.n_pds == 1) specs.push_back(s);
  }
  CcgParams p;
  p.total_time_limit = 240;
  p.master_time_limit = 120;
  const auto rows = run_recorded(specs, p);
  std::map<std::uint64_t, std::map<int, const ExperimentRow*>> by_seed;
  for (const auto& r : rows) by_seed[r.seed][r.n_pds] = &r;
  int holds = 0;
  std::ostringstream line;
  for (const auto& [seed, m] : by_seed) {
    const auto* six = m.at(6);
    const auto* one = m.at(1);
    line << " s" << seed << ":";
    if (!six->objective || !one->objective) {
      line << "missing";
      continue;
    }
    const bool ok = six->objective->to_double() >= one->objective->to_double() - 1e-6;
    holds += ok;
    line << fmt(six->objective->to_double(), 0) << (ok ? ">=" : "<") << fmt(one->objective->to_double(), 0);
    if (six->status != "optimal") line << "(J=6 " << six->status << ")";
  }
  return {holds >= 4, "T=3 pool, J=6 vs J=1" + line.str() + "; holds in " + std::to_string(holds) + "/5 seeds; " +
                          fmt(seconds_since(t0)) + " s"};
}

Outcome finite_termination() {
  tiny_runs();
  int over = 0, dup = 0, space = 0;
  std::string first;
  for (const auto& r : g_runs) {
    if (r.duplicate_column) ++dup;
    if (r.iterations > static_cast<int>(r.distinct_budgets)) {
      ++over;
      if (first.empty()) {
        first = r.label + " (" + std::to_string(r.iterations) + " iterations, " +
                std::to_string(r.distinct_budgets) + " distinct budgets)";
      }
    }
    if (r.total_budget > 0) {
      try {
        if (r.distinct_budgets > weak_composition_count(r.total_budget, r.n_pds)) ++space;
      } catch (const std::overflow_error&) {
        // a count beyond 64 bits bounds any run
      }
    }
  }
  Outcome o{g_runs.size() > 0 && over == 0 && dup == 0 && space == 0,
            std::to_string(g_runs.size()) + " runs: " + std::to_string(over) +
                " with more iterations than distinct budgets, " + std::to_string(space) +
                " beyond the composition count, " + std::to_string(dup) + " with a duplicate column"};
  if (!first.empty()) o.detail += "; e.g. " + first;
  return o;
}

// ---------------------------------------------------------------------------

Outcome solver_soundness() {
  const auto bnb = mip::make_backend("bnb");
  int ok = 0, agree = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto m = random_ip(seed);
    const auto expected = enumerate(m);
    const auto got = mip::reference_solve(m);
    const bool match = got.status == (expected.feasible ? mip::SolveStatus::Optimal : mip::SolveStatus::Infeasible) &&
                       (!expected.feasible || got.objective == expected.objective);
    ok += match;
    const auto other = mip::solve(m, {}, *bnb);
    agree += other.status == got.status &&
             (got.status != mip::SolveStatus::Optimal || std::fabs(other.objective - got.objective) <= 1e-6);
  }
  return {ok == 200 && agree == 200, "reference matches enumeration on " + std::to_string(ok) +
                                         "/200 random IPs; the bundled branch-and-bound backend agrees on " +
                                         std::to_string(agree) + "/200"};
}

Outcome generator_conformance() {
  const std::vector<std::array<int, 4>> classes = {{4, 2, 4, 2}, {6, 3, 4, 2}, {8, 2, 8, 2}, {12, 4, 12, 6}, {2, 2, 2, 1}};
  int ok = 0, identical = 0;
  std::string first;
  for (int k = 0; k < 100; ++k) {
    const auto [T, J, N, P] = classes[static_cast<std::size_t>(k) % classes.size()];
    const double bc = 0.05 + 0.05 * (k % 10);
    const GenConfig c{T, J, N, P, bc, static_cast<std::uint64_t>(1000 + k)};
    const auto inst = generate_instance(c);
    const auto v = generator_bound_violations(inst, c);
    ok += v.empty();
    if (!v.empty() && first.empty()) first = v.front();
    identical += dump_instance(inst) == dump_instance(generate_instance(c));
  }
  Outcome o{ok == 100 && identical == 100, std::to_string(ok) + "/100 instances within every bound, " +
                                               std::to_string(identical) + "/100 regenerate byte-identically"};
  if (!first.empty()) o.detail += "; first violation " + first;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only, expect_fail;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if ((a == "--only" || a == "--expect-fail" || a == "--workers") && i + 1 < argc) {
      const int v = std::stoi(argv[++i]);
      if (a == "--only") only.insert(v);
      if (a == "--expect-fail") expect_fail.insert(v);
      if (a == "--workers") g_workers = static_cast<unsigned>(std::max(1, v));
    } else {
      std::cerr << "usage: acceptance [--only N]... [--expect-fail N]... [--workers K]\n";
      return 2;
    }
  }
  // Criterion 6 looks at every run made by the others, so it goes last.
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, oracle_equivalence}, {2, follower_certificate}, {3, pseudo_nash},    {4, bound_validity},
      {5, weak_compositions},  {7, budget_plateau},       {8, competition_trend}, {9, solver_soundness},
      {10, generator_conformance}, {6, finite_termination}};
  std::map<int, Outcome> results;
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    try {
      results[id] = fn();
    } catch (const std::exception& e) {
      results[id] = {false, std::string("threw: ") + e.what()};
    }
  }
  bool as_expected = true;
  for (const auto& [id, o] : results) {
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail;
    if (!o.pass && expect_fail.count(id)) std::cout << "  [known failure]";
    std::cout << "\n";
    as_expected = as_expected && (o.pass != static_cast<bool>(expect_fail.count(id)));
  }
  return as_expected ? 0 : 1;
}
