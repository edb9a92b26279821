#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "prodtrans/ccg.hpp"
#include "prodtrans/generator.hpp"

namespace prodtrans {

/// One experiment run: the class it belongs to and everything needed to
/// rebuild its instance.
struct RunSpec {
  std::string class_id;
  GenConfig config;
  /// Build from the competition pool (config.n_pds PDs) instead of generate_instance.
  bool competition = false;
  /// Applied after generation when set: {factory, engineering, budget}.
  std::optional<std::array<std::int64_t, 3>> clamp;
};

Instance build_instance(const RunSpec& spec);

struct ExperimentRow {
  std::string class_id;
  int horizon = 0;
  int n_pds = 0;
  int products_per_pd = 0;
  int new_per_pd = 0;
  double budget_fraction = 0.0;
  std::uint64_t seed = 0;
  /// A CcgStatus name, or "error" when the run threw (see `error`).
  std::string status;
  double wall_seconds = 0.0;
  int iterations = 0;
  std::optional<Money> objective;
  std::optional<double> gap;
  std::size_t distinct_budgets = 0;
  std::string error;

  // Study extras, empty unless the run finished with an incumbent.
  std::int64_t total_budget = 0;
  std::vector<Money> pd_phi;
  std::vector<std::int64_t> pd_budget;
  std::vector<Money> pd_spend;
};

struct PoolOptions {
  unsigned workers = 1;
  /// Runs not yet started once this much wall time has passed are recorded
  /// as time_limit without being attempted.
  double grid_time_limit = mip::kInfinity;
  /// When set, each finished row is also written to <row_dir>/<index>.csv
  /// through a temporary file and a rename.
  std::filesystem::path row_dir;
  std::function<void(std::size_t index, const ExperimentRow&)> on_row;
};

/// Solves one spec; exceptions are recorded in the row, never propagated.
ExperimentRow run_one(const RunSpec& spec, const CcgParams& params);

/// Runs every spec in a bounded worker pool. Rows come back in spec order.
std::vector<ExperimentRow> run_pool(const std::vector<RunSpec>& specs, const CcgParams& params,
                                    const PoolOptions& options = {});

std::vector<RunSpec> specs_from_grid(const std::vector<GridEntry>& grid);

struct ClassSummary {
  std::string class_id;
  std::size_t runs = 0;
  std::size_t optimal = 0;
  std::size_t unsolved = 0;
  std::size_t errors = 0;
  double time_mean = 0.0, time_min = 0.0, time_max = 0.0;
  double iter_mean = 0.0, iter_min = 0.0, iter_max = 0.0;
};

/// Per class in first-appearance order. Time and iteration statistics cover
/// every row that did not error.
std::vector<ClassSummary> summarize(const std::vector<ExperimentRow>& rows);

inline constexpr double kBudgetStudyFractions[] = {0.05, 0.1, 0.2, 0.3, 0.4, 0.5};

/// One spec per (fraction, seed) for a fixed class; class ids are "Bc=<fraction>".
std::vector<RunSpec> budget_study_specs(const GenConfig& base, const std::vector<std::uint64_t>& seeds);

/// One spec per (competition class, seed); class ids K1..K4 follow kCompetitionPdCounts.
std::vector<RunSpec> competition_study_specs(int horizon, const std::vector<std::uint64_t>& seeds,
                                             double budget_fraction = 0.4);

struct CompetitionClassRow {
  std::string class_id;
  int n_pds = 0;
  std::size_t runs = 0;
  std::size_t with_incumbent = 0;
  double mean_leader_objective = 0.0;
  double mean_pd_objective = 0.0;
};

std::vector<CompetitionClassRow> competition_summary(const std::vector<ExperimentRow>& rows);

/// Mean follower cost over the PDs of one row; nullopt without an incumbent.
std::optional<double> mean_pd_objective(const ExperimentRow& row);

// CSV output. Doubles are written in shortest round-trip form so that a
// parsed row carries exactly the value that was summarized.
extern const char* const kRowsHeader;
extern const char* const kSummaryHeader;
extern const char* const kBudgetStudyHeader;
extern const char* const kCompetitionRowsHeader;
extern const char* const kCompetitionSummaryHeader;

void write_rows_csv(const std::vector<ExperimentRow>& rows, std::ostream& out);
void write_summary_csv(const std::vector<ClassSummary>& summary, std::ostream& out);
void write_budget_study_csv(const std::vector<ExperimentRow>& rows, std::ostream& out);
void write_competition_rows_csv(const std::vector<ExperimentRow>& rows, std::ostream& out);
void write_competition_summary_csv(const std::vector<CompetitionClassRow>& summary, std::ostream& out);

/// Parses the output of write_rows_csv. Throws std::runtime_error on malformed input.
std::vector<ExperimentRow> read_rows_csv(std::istream& in);

/// Writes `text` to `path` through a sibling temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

std::string format_double(double value);

}  // namespace prodtrans
