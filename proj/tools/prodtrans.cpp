#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "prodtrans/ccg.hpp"
#include "prodtrans/experiments.hpp"
#include "prodtrans/generator.hpp"
#include "prodtrans/instance_io.hpp"
#include "prodtrans/oracle.hpp"

namespace fs = std::filesystem;
using namespace prodtrans;
using nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kError = 1, kUsage = 2, kInfeasible = 3, kTimeLimit = 4, kExhausted = 5 };

int exit_code(CcgStatus status) {
  switch (status) {
    case CcgStatus::Optimal: return kOk;
    case CcgStatus::Infeasible: return kInfeasible;
    case CcgStatus::TimeLimit: return kTimeLimit;
    case CcgStatus::Exhausted: return kExhausted;
  }
  return kError;
}

ordered_json bound_json(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

ordered_json plans_json(const Instance& inst, const std::vector<FollowerSolution>& plans) {
  ordered_json out = ordered_json::array();
  for (std::size_t j = 0; j < plans.size(); ++j) out.push_back(plan_to_json(inst.pds[j], plans[j]));
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomic(path, text);
}

struct GenerateOpts {
  GenConfig config;
  bool competition = false;
  std::int64_t clamp_factory = -1, clamp_eng = -1, clamp_budget = -1;
  std::string out;
  std::string out_dir = ".";
};

int cmd_generate(const GenerateOpts& o) {
  RunSpec spec{"", o.config, o.competition, std::nullopt};
  if (o.competition) {
    if (o.config.n_pds <= 0 || 6 % o.config.n_pds != 0) {
      std::cerr << "generate: --pds must divide 6 for the competition pool\n";
      return kUsage;
    }
  } else if (auto v = config_violations(o.config); !v.empty()) {
    for (const auto& m : v) std::cerr << "generate: " << m << '\n';
    return kUsage;
  }
  const bool any_clamp = o.clamp_factory >= 0 || o.clamp_eng >= 0 || o.clamp_budget >= 0;
  if (any_clamp) {
    constexpr auto kNone = std::numeric_limits<std::int64_t>::max();
    spec.clamp = std::array<std::int64_t, 3>{o.clamp_factory >= 0 ? o.clamp_factory : kNone,
                                             o.clamp_eng >= 0 ? o.clamp_eng : kNone,
                                             o.clamp_budget >= 0 ? o.clamp_budget : kNone};
  }
  const Instance inst = build_instance(spec);
  fs::path path = o.out;
  if (path.empty()) {
    const auto& c = o.config;
    std::ostringstream name;
    name << (o.competition ? "competition" : "instance") << "_T" << c.horizon << "_J" << c.n_pds;
    if (!o.competition) name << "_N" << c.products_per_pd << "_P" << c.new_per_pd;
    name << "_Bc" << format_double(c.budget_fraction) << "_s" << c.seed << ".json";
    path = fs::path(o.out_dir) / name.str();
  }
  write_text(path, dump_instance(inst));
  std::cout << path.string() << '\n';
  return kOk;
}

struct SolveOpts {
  std::string instance;
  std::string out_dir = ".";
  std::string cuts = "capacity";
  std::string dump_lp;
  bool serial = false;
  CcgParams params;
};

int cmd_solve(const SolveOpts& o) {
  const Instance inst = read_instance(o.instance);
  CcgParams params = o.params;
  params.cut_rule = parse_cut_rule(o.cuts);
  params.parallel = !o.serial;
  params.lp_dump_dir = o.dump_lp;
  const CcgResult res = run_ccg(inst, params);

  ordered_json doc;
  doc["instance"] = o.instance;
  doc["solver"] = "ccg";
  doc["status"] = to_string(res.status);
  doc["objective"] = res.has_incumbent ? money_to_json(res.objective) : ordered_json(nullptr);
  doc["relaxation_bound"] = bound_json(res.relaxation_bound);
  doc["incumbent_bound"] = bound_json(res.incumbent_bound);
  doc["gap"] = res.has_incumbent ? bound_json(res.relaxation_bound - res.incumbent_bound) : ordered_json(nullptr);
  doc["iterations"] = res.iterations;
  doc["distinct_budgets"] = res.distinct_budgets;
  doc["wall_seconds"] = res.wall_seconds;
  doc["leader"] = res.has_incumbent ? leader_to_json(res.leader) : ordered_json(nullptr);
  doc["plans"] = res.has_incumbent ? plans_json(inst, res.plans) : ordered_json::array();

  const fs::path dir = o.out_dir;
  write_text(dir / "result.json", doc.dump(2) + "\n");
  std::ostringstream trace;
  write_trace_csv(res.trace, trace);
  write_text(dir / "trace.csv", trace.str());
  std::cout << "status " << to_string(res.status) << " objective "
            << (res.has_incumbent ? res.objective.to_string() : std::string("none")) << " iterations "
            << res.iterations << '\n';
  return exit_code(res.status);
}

struct OracleOpts {
  std::string instance;
  std::string out_dir = ".";
  long long max_leaves = 1'000'000;
};

int cmd_oracle(const OracleOpts& o) {
  const Instance inst = read_instance(o.instance);
  OracleLimits limits;
  limits.max_leaves = o.max_leaves;
  const auto start = std::chrono::steady_clock::now();
  const OracleResult res = brute_force_bilevel(inst, limits);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ordered_json doc;
  doc["instance"] = o.instance;
  doc["solver"] = "oracle";
  doc["status"] = "optimal";
  doc["objective"] = money_to_json(res.objective);
  doc["relaxation_bound"] = res.objective.to_double();
  doc["incumbent_bound"] = res.objective.to_double();
  doc["gap"] = 0.0;
  doc["leaves"] = res.leaves;
  doc["follower_solves"] = res.follower_solves;
  doc["wall_seconds"] = seconds;
  doc["leader"] = leader_to_json(res.leader);
  doc["plans"] = plans_json(inst, res.plans);
  write_text(fs::path(o.out_dir) / "oracle.json", doc.dump(2) + "\n");
  std::cout << "status optimal objective " << res.objective.to_string() << " leaves " << res.leaves << '\n';
  return kOk;
}

struct ExperimentOpts {
  std::string grid = "desk";
  std::string study = "grid";
  int seeds = 3;
  unsigned workers = 0;
  double grid_time_limit = mip::kInfinity;
  std::string out_dir = "results";
  std::string cuts = "capacity";
  std::vector<int> budget_class{6, 3, 4, 2};
  int competition_horizon = 4;
  CcgParams params;
};

int cmd_experiment(const ExperimentOpts& o) {
  CcgParams params = o.params;
  params.cut_rule = parse_cut_rule(o.cuts);
  std::vector<std::uint64_t> seeds;
  for (int s = 1; s <= o.seeds; ++s) seeds.push_back(static_cast<std::uint64_t>(s));

  std::vector<RunSpec> specs;
  if (o.study == "grid") {
    specs = specs_from_grid(o.grid == "full" ? full_grid(o.seeds) : desk_grid(o.seeds));
  } else if (o.study == "budget") {
    GenConfig base;
    base.horizon = o.budget_class[0];
    base.n_pds = o.budget_class[1];
    base.products_per_pd = o.budget_class[2];
    base.new_per_pd = o.budget_class[3];
    if (auto v = config_violations(base); !v.empty()) {
      for (const auto& m : v) std::cerr << "experiment: " << m << '\n';
      return kUsage;
    }
    specs = budget_study_specs(base, seeds);
  } else {
    specs = competition_study_specs(o.competition_horizon, seeds);
  }

  const fs::path dir = o.out_dir;
  PoolOptions pool;
  pool.workers = o.workers > 0 ? o.workers : std::max(1u, std::thread::hardware_concurrency() / 2);
  pool.grid_time_limit = o.grid_time_limit;
  pool.row_dir = dir / "rows";
  pool.on_row = [&](std::size_t i, const ExperimentRow& r) {
    std::cerr << '[' << i + 1 << '/' << specs.size() << "] " << r.class_id << " seed " << r.seed << ": " << r.status
              << " in " << format_double(r.wall_seconds) << " s\n";
  };
  const auto rows = run_pool(specs, params, pool);

  std::ostringstream text;
  write_rows_csv(rows, text);
  write_text(dir / "rows.csv", text.str());
  text.str("");
  write_summary_csv(summarize(rows), text);
  write_text(dir / "summary.csv", text.str());
  if (o.study == "budget") {
    text.str("");
    write_budget_study_csv(rows, text);
    write_text(dir / "budget_study.csv", text.str());
  } else if (o.study == "competition") {
    text.str("");
    write_competition_rows_csv(rows, text);
    write_text(dir / "competition_rows.csv", text.str());
    text.str("");
    write_competition_summary_csv(competition_summary(rows), text);
    write_text(dir / "competition_summary.csv", text.str());
  }
  std::size_t optimal = 0;
  for (const auto& r : rows) optimal += r.status == "optimal";
  std::cout << optimal << " of " << rows.size() << " runs optimal; results in " << dir.string() << '\n';
  return kOk;
}

void add_solver_flags(CLI::App* cmd, CcgParams& p, std::string& cuts) {
  p.total_time_limit = 120.0;
  p.master_time_limit = 60.0;
  cmd->add_option("--epsilon", p.epsilon, "Optimality gap tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--time-limit", p.total_time_limit, "Wall-clock limit per run in seconds")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--master-time-limit", p.master_time_limit, "Limit per master solve in seconds")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--backend", p.backend, "MIP backend (default from PRODTRANS_MIP_BACKEND)");
  cmd->add_option("--cuts", cuts, "Master cut rule")->check(CLI::IsMember({"capacity", "budget"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bilevel production and capacity planning solver"};
  app.require_subcommand(1);

  GenerateOpts gen;
  auto* g = app.add_subcommand("generate", "Write a random instance");
  g->add_option("--horizon,-T", gen.config.horizon, "Periods")->check(CLI::PositiveNumber);
  g->add_option("--pds,-J", gen.config.n_pds, "Product divisions")->check(CLI::PositiveNumber);
  g->add_option("--products,-N", gen.config.products_per_pd, "Products per PD");
  g->add_option("--new,-P", gen.config.new_per_pd, "New products per PD");
  g->add_option("--budget-fraction", gen.config.budget_fraction, "Bc");
  g->add_option("--seed", gen.config.seed, "Random seed");
  g->add_flag("--pi-per-period", gen.config.pi_per_period, "Draw revenue per period");
  g->add_flag("--require-cover", gen.config.require_capacity_cover, "Redraw capacities until they cover demand");
  g->add_flag("--competition", gen.competition, "Build from the 12-product competition pool");
  g->add_option("--clamp-factory", gen.clamp_factory, "Cap factory capacity per period");
  g->add_option("--clamp-eng", gen.clamp_eng, "Cap engineering capacity per period");
  g->add_option("--clamp-budget", gen.clamp_budget, "Cap the total budget");
  g->add_option("--out,-o", gen.out, "Output file (default: derived name in --out-dir)");
  g->add_option("--out-dir", gen.out_dir, "Output directory");

  SolveOpts solve;
  auto* s = app.add_subcommand("solve", "Solve an instance with column-and-constraint generation");
  s->add_option("--instance", solve.instance, "Instance JSON")->required()->check(CLI::ExistingFile);
  add_solver_flags(s, solve.params, solve.cuts);
  s->add_option("--out-dir", solve.out_dir, "Directory for result.json and trace.csv");
  s->add_option("--dump-lp", solve.dump_lp, "Write every master model as LP text into this directory");
  s->add_flag("--serial", solve.serial, "Evaluate followers sequentially");

  OracleOpts oracle;
  auto* o = app.add_subcommand("oracle", "Solve a tiny instance by exhaustive enumeration");
  o->add_option("--instance", oracle.instance, "Instance JSON")->required()->check(CLI::ExistingFile);
  o->add_option("--max-leaves", oracle.max_leaves, "Abort after this many leader decisions")
      ->check(CLI::PositiveNumber);
  o->add_option("--out-dir", oracle.out_dir, "Directory for oracle.json");

  ExperimentOpts exp;
  auto* e = app.add_subcommand("experiment", "Run an experiment grid or study");
  e->add_option("--grid", exp.grid, "Grid for --study grid")->check(CLI::IsMember({"desk", "full"}));
  e->add_option("--study", exp.study, "What to run")->check(CLI::IsMember({"grid", "budget", "competition"}));
  e->add_option("--seeds", exp.seeds, "Seeds per class (1..n)")->check(CLI::PositiveNumber);
  e->add_option("--workers", exp.workers, "Concurrent runs (default: half the cores)");
  e->add_option("--grid-time-limit", exp.grid_time_limit, "Wall-clock limit for the whole grid")
      ->check(CLI::PositiveNumber);
  e->add_option("--budget-class", exp.budget_class, "T J N P of the budget study class")->expected(4);
  e->add_option("--competition-horizon", exp.competition_horizon, "T of the competition study")
      ->check(CLI::PositiveNumber);
  e->add_option("--out-dir", exp.out_dir, "Output directory");
  add_solver_flags(e, exp.params, exp.cuts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*s) return cmd_solve(solve);
    if (*o) return cmd_oracle(oracle);
    if (*e) return cmd_experiment(exp);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kError;
  }
  return kUsage;
}
