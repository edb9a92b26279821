#include "prodtrans/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace prodtrans {

Instance build_instance(const RunSpec& spec) {
  Instance inst = spec.competition
                      ? competition_instance(spec.config.seed, spec.config.horizon, spec.config.n_pds,
                                             spec.config.budget_fraction)
                      : generate_instance(spec.config);
  if (spec.clamp) clamp_instance(inst, (*spec.clamp)[0], (*spec.clamp)[1], (*spec.clamp)[2]);
  return inst;
}

namespace {

ExperimentRow row_header(const RunSpec& spec) {
  ExperimentRow row;
  row.class_id = spec.class_id;
  row.horizon = spec.config.horizon;
  row.n_pds = spec.config.n_pds;
  row.products_per_pd = spec.competition ? 12 / std::max(1, spec.config.n_pds) : spec.config.products_per_pd;
  row.new_per_pd = spec.competition ? 6 / std::max(1, spec.config.n_pds) : spec.config.new_per_pd;
  row.budget_fraction = spec.config.budget_fraction;
  row.seed = spec.config.seed;
  return row;
}

}  // namespace

ExperimentRow run_one(const RunSpec& spec, const CcgParams& params) {
  ExperimentRow row = row_header(spec);
  const auto start = std::chrono::steady_clock::now();
  try {
    const Instance inst = build_instance(spec);
    row.total_budget = inst.total_budget;
    const CcgResult res = run_ccg(inst, params);
    row.status = to_string(res.status);
    row.wall_seconds = res.wall_seconds;
    row.iterations = res.iterations;
    row.distinct_budgets = res.distinct_budgets;
    if (res.has_incumbent) {
      row.objective = res.objective;
      row.gap = std::max(0.0, res.relaxation_bound - res.incumbent_bound);
      for (std::size_t j = 0; j < inst.pd_count(); ++j) {
        row.pd_phi.push_back(res.plans[j].cost);
        row.pd_budget.push_back(res.leader.budget[j]);
        row.pd_spend.push_back(allocation_cost(inst.pds[j], res.leader.factory_alloc[j], res.leader.eng_alloc[j]));
      }
    }
  } catch (const std::exception& e) {
    row.status = "error";
    row.error = e.what();
    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return row;
}

std::vector<ExperimentRow> run_pool(const std::vector<RunSpec>& specs, const CcgParams& params,
                                    const PoolOptions& options) {
  std::vector<ExperimentRow> rows(specs.size());
  std::atomic<std::size_t> next{0};
  std::mutex callback_mutex;
  const auto start = std::chrono::steady_clock::now();
  if (!options.row_dir.empty()) std::filesystem::create_directories(options.row_dir);

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= specs.size()) return;
      const double used = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      ExperimentRow row;
      if (used >= options.grid_time_limit) {
        row = row_header(specs[i]);
        row.status = to_string(CcgStatus::TimeLimit);
        row.error = "grid time limit reached before start";
      } else {
        CcgParams p = params;
        p.total_time_limit = std::min(p.total_time_limit, options.grid_time_limit - used);
        row = run_one(specs[i], p);
      }
      if (!options.row_dir.empty()) {
        std::ostringstream text;
        write_rows_csv({row}, text);
        write_file_atomic(options.row_dir / (std::to_string(i) + ".csv"), text.str());
      }
      rows[i] = std::move(row);
      if (options.on_row) {
        std::lock_guard lock(callback_mutex);
        options.on_row(i, rows[i]);
      }
    }
  };

  const unsigned n = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(specs.size())));
  std::vector<std::jthread> pool;
  for (unsigned w = 1; w < n; ++w) pool.emplace_back(worker);
  worker();
  pool.clear();
  return rows;
}

std::vector<RunSpec> specs_from_grid(const std::vector<GridEntry>& grid) {
  std::vector<RunSpec> specs;
  for (const auto& e : grid) specs.push_back({e.class_id, e.config, false, std::nullopt});
  return specs;
}

std::vector<ClassSummary> summarize(const std::vector<ExperimentRow>& rows) {
  std::vector<ClassSummary> out;
  std::map<std::string, std::size_t> slot;
  std::vector<std::size_t> counted;
  for (const auto& r : rows) {
    auto [it, fresh] = slot.try_emplace(r.class_id, out.size());
    if (fresh) {
      out.push_back({});
      out.back().class_id = r.class_id;
      counted.push_back(0);
    }
    auto& s = out[it->second];
    auto& n = counted[it->second];
    ++s.runs;
    if (r.status == "optimal") {
      ++s.optimal;
    } else {
      ++s.unsolved;
    }
    if (r.status == "error") {
      ++s.errors;
      continue;
    }
    const double it_count = r.iterations;
    if (n == 0) {
      s.time_min = s.time_max = r.wall_seconds;
      s.iter_min = s.iter_max = it_count;
    } else {
      s.time_min = std::min(s.time_min, r.wall_seconds);
      s.time_max = std::max(s.time_max, r.wall_seconds);
      s.iter_min = std::min(s.iter_min, it_count);
      s.iter_max = std::max(s.iter_max, it_count);
    }
    s.time_mean += r.wall_seconds;
    s.iter_mean += it_count;
    ++n;
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (counted[k] == 0) continue;
    out[k].time_mean /= static_cast<double>(counted[k]);
    out[k].iter_mean /= static_cast<double>(counted[k]);
  }
  return out;
}

std::vector<RunSpec> budget_study_specs(const GenConfig& base, const std::vector<std::uint64_t>& seeds) {
  std::vector<RunSpec> specs;
  for (double bc : kBudgetStudyFractions) {
    for (auto seed : seeds) {
      GenConfig c = base;
      c.budget_fraction = bc;
      c.seed = seed;
      specs.push_back({"Bc=" + format_double(bc), c, false, std::nullopt});
    }
  }
  return specs;
}

std::vector<RunSpec> competition_study_specs(int horizon, const std::vector<std::uint64_t>& seeds,
                                             double budget_fraction) {
  std::vector<RunSpec> specs;
  int k = 0;
  for (int j : kCompetitionPdCounts) {
    ++k;
    for (auto seed : seeds) {
      GenConfig c;
      c.horizon = horizon;
      c.n_pds = j;
      c.products_per_pd = 12 / j;
      c.new_per_pd = 6 / j;
      c.budget_fraction = budget_fraction;
      c.seed = seed;
      specs.push_back({"K" + std::to_string(k), c, true, std::nullopt});
    }
  }
  return specs;
}

std::optional<double> mean_pd_objective(const ExperimentRow& row) {
  if (row.pd_phi.empty()) return std::nullopt;
  Money total;
  for (auto phi : row.pd_phi) total += phi;
  return total.to_double() / static_cast<double>(row.pd_phi.size());
}

std::vector<CompetitionClassRow> competition_summary(const std::vector<ExperimentRow>& rows) {
  std::vector<CompetitionClassRow> out;
  std::map<std::string, std::size_t> slot;
  for (const auto& r : rows) {
    auto [it, fresh] = slot.try_emplace(r.class_id, out.size());
    if (fresh) out.push_back({r.class_id, r.n_pds});
    auto& s = out[it->second];
    ++s.runs;
    if (!r.objective) continue;
    ++s.with_incumbent;
    s.mean_leader_objective += r.objective->to_double();
    s.mean_pd_objective += *mean_pd_objective(r);
  }
  for (auto& s : out) {
    if (s.with_incumbent == 0) continue;
    s.mean_leader_objective /= static_cast<double>(s.with_incumbent);
    s.mean_pd_objective /= static_cast<double>(s.with_incumbent);
  }
  return out;
}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, end);
}

namespace {

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c == '\n' || c == '\r' ? ' ' : c;
  }
  return out + '"';
}

template <class T, class F>
std::string join(const std::vector<T>& values, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ';';
    out += fmt(values[i]);
  }
  return out;
}

std::string money_text(const std::optional<Money>& m) { return m ? m->to_string() : std::string(); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw std::runtime_error("unterminated quoted CSV field");
  return fields;
}

template <class T>
T parse_number(const std::string& text, const char* what) {
  T value{};
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw std::runtime_error(std::string("bad ") + what + " field '" + text + "'");
  }
  return value;
}

}  // namespace

const char* const kRowsHeader =
    "class_id,T,J,N,P,Bc,seed,status,wall_seconds,iterations,objective,gap,distinct_budgets,error";
const char* const kSummaryHeader =
    "class_id,runs,optimal,unsolved,errors,time_mean,time_min,time_max,iter_mean,iter_min,iter_max";
const char* const kBudgetStudyHeader =
    "class_id,Bc,seed,status,wall_seconds,iterations,total_budget,leader_objective,pd_phi,pd_budget,pd_spend";
const char* const kCompetitionRowsHeader =
    "class_id,J,seed,status,wall_seconds,iterations,leader_objective,mean_pd_objective";
const char* const kCompetitionSummaryHeader =
    "class_id,J,runs,with_incumbent,mean_leader_objective,mean_pd_objective";

void write_rows_csv(const std::vector<ExperimentRow>& rows, std::ostream& out) {
  out << kRowsHeader << '\n';
  for (const auto& r : rows) {
    out << csv_field(r.class_id) << ',' << r.horizon << ',' << r.n_pds << ',' << r.products_per_pd << ','
        << r.new_per_pd << ',' << format_double(r.budget_fraction) << ',' << r.seed << ',' << r.status << ','
        << format_double(r.wall_seconds) << ',' << r.iterations << ',' << money_text(r.objective) << ','
        << (r.gap ? format_double(*r.gap) : std::string()) << ',' << r.distinct_budgets << ','
        << csv_field(r.error) << '\n';
  }
}

std::vector<ExperimentRow> read_rows_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kRowsHeader) throw std::runtime_error("unexpected rows CSV header");
  std::vector<ExperimentRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 14) throw std::runtime_error("rows CSV line has " + std::to_string(f.size()) + " fields");
    ExperimentRow r;
    r.class_id = f[0];
    r.horizon = parse_number<int>(f[1], "T");
    r.n_pds = parse_number<int>(f[2], "J");
    r.products_per_pd = parse_number<int>(f[3], "N");
    r.new_per_pd = parse_number<int>(f[4], "P");
    r.budget_fraction = parse_number<double>(f[5], "Bc");
    r.seed = parse_number<std::uint64_t>(f[6], "seed");
    r.status = f[7];
    r.wall_seconds = parse_number<double>(f[8], "wall_seconds");
    r.iterations = parse_number<int>(f[9], "iterations");
    if (!f[10].empty()) r.objective = Money::parse(f[10]);
    if (!f[11].empty()) r.gap = parse_number<double>(f[11], "gap");
    r.distinct_budgets = parse_number<std::size_t>(f[12], "distinct_budgets");
    r.error = f[13];
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_summary_csv(const std::vector<ClassSummary>& summary, std::ostream& out) {
  out << kSummaryHeader << '\n';
  for (const auto& s : summary) {
    out << csv_field(s.class_id) << ',' << s.runs << ',' << s.optimal << ',' << s.unsolved << ',' << s.errors << ','
        << format_double(s.time_mean) << ',' << format_double(s.time_min) << ',' << format_double(s.time_max) << ','
        << format_double(s.iter_mean) << ',' << format_double(s.iter_min) << ',' << format_double(s.iter_max)
        << '\n';
  }
}

void write_budget_study_csv(const std::vector<ExperimentRow>& rows, std::ostream& out) {
  out << kBudgetStudyHeader << '\n';
  auto money = [](Money m) { return m.to_string(); };
  auto integer = [](std::int64_t v) { return std::to_string(v); };
  for (const auto& r : rows) {
    out << csv_field(r.class_id) << ',' << format_double(r.budget_fraction) << ',' << r.seed << ',' << r.status
        << ',' << format_double(r.wall_seconds) << ',' << r.iterations << ',' << r.total_budget << ','
        << money_text(r.objective) << ',' << join(r.pd_phi, money) << ',' << join(r.pd_budget, integer) << ','
        << join(r.pd_spend, money) << '\n';
  }
}

void write_competition_rows_csv(const std::vector<ExperimentRow>& rows, std::ostream& out) {
  out << kCompetitionRowsHeader << '\n';
  for (const auto& r : rows) {
    const auto mean = mean_pd_objective(r);
    out << csv_field(r.class_id) << ',' << r.n_pds << ',' << r.seed << ',' << r.status << ','
        << format_double(r.wall_seconds) << ',' << r.iterations << ',' << money_text(r.objective) << ','
        << (mean ? format_double(*mean) : std::string()) << '\n';
  }
}

void write_competition_summary_csv(const std::vector<CompetitionClassRow>& summary, std::ostream& out) {
  out << kCompetitionSummaryHeader << '\n';
  for (const auto& s : summary) {
    out << csv_field(s.class_id) << ',' << s.n_pds << ',' << s.runs << ',' << s.with_incumbent << ','
        << format_double(s.mean_leader_objective) << ',' << format_double(s.mean_pd_objective) << '\n';
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace prodtrans
