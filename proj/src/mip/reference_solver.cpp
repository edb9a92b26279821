#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>

#include "prodtrans/mip/backend.hpp"

namespace prodtrans::mip {

namespace {

constexpr double kFeasTol = 1e-9;

struct Row {
  std::vector<int> vars;
  std::vector<double> coefs;
  double lower;
  double upper;
};

double scaled_tol(double magnitude) { return kFeasTol * std::max(1.0, std::fabs(magnitude)); }

class DepthFirstSearch {
 public:
  DepthFirstSearch(const MipModel& model, const ReferenceOptions& options) : model_(model), options_(options) {
    const int n = model.variable_count();
    lower_.resize(static_cast<std::size_t>(n));
    upper_.resize(static_cast<std::size_t>(n));
    cost_.assign(static_cast<std::size_t>(n), 0.0);
    rows_of_var_.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      const auto& v = model.variables()[static_cast<std::size_t>(j)];
      if (!v.integer) throw MalformedModel("reference_solve: variable " + v.name + " is not integer");
      if (!std::isfinite(v.lower) || !std::isfinite(v.upper)) {
        throw MalformedModel("reference_solve: variable " + v.name + " has an infinite bound");
      }
      lower_[j] = static_cast<std::int64_t>(std::ceil(v.lower - kFeasTol));
      upper_[j] = static_cast<std::int64_t>(std::floor(v.upper + kFeasTol));
    }
    const double sign = model.sense() == Sense::Maximize ? -1.0 : 1.0;
    for (const auto& t : model.objective()) cost_[static_cast<std::size_t>(t.var)] += sign * t.coef;
    constant_ = sign * model.objective_constant();

    for (const auto& c : model.constraints()) {
      Row row;
      for (const auto& t : c.terms) {
        if (t.coef == 0.0) continue;
        row.vars.push_back(t.var);
        row.coefs.push_back(t.coef);
      }
      row.lower = c.relation == Relation::LessEqual ? -kInfinity : c.rhs;
      row.upper = c.relation == Relation::GreaterEqual ? kInfinity : c.rhs;
      const int r = static_cast<int>(rows_.size());
      for (int v : row.vars) rows_of_var_[static_cast<std::size_t>(v)].push_back(r);
      rows_.push_back(std::move(row));
    }
    queued_.assign(rows_.size(), false);
  }

  MipSolution run() {
    start_ = std::chrono::steady_clock::now();
    MipSolution out;
    std::vector<int> all(rows_.size());
    for (std::size_t r = 0; r < rows_.size(); ++r) all[r] = static_cast<int>(r);
    if (propagate_rows(all)) search();
    out.nodes = nodes_;
    const double sign = model_.sense() == Sense::Maximize ? -1.0 : 1.0;
    if (timed_out_) {
      out.status = SolveStatus::TimeLimit;
    } else {
      out.status = has_incumbent_ ? SolveStatus::Optimal : SolveStatus::Infeasible;
    }
    if (has_incumbent_) {
      out.has_solution = true;
      out.values.assign(best_.begin(), best_.end());
      out.objective = model_.evaluate_objective(out.values);
      out.bound = timed_out_ ? sign * -kInfinity : out.objective;
    } else {
      out.bound = sign * kInfinity;
      out.objective = out.bound;
    }
    return out;
  }

 private:
  void search() {
    if (++nodes_ > options_.max_nodes) {
      throw SearchBudgetExceeded("reference_solve: node budget of " + std::to_string(options_.max_nodes) +
                                 " exceeded");
    }
    if ((nodes_ & 1023) == 0 && std::isfinite(options_.time_seconds)) {
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
      if (elapsed > options_.time_seconds) timed_out_ = true;
    }
    if (timed_out_) return;

    const double bound = objective_bound();
    if (has_incumbent_ && bound >= incumbent_ - scaled_tol(incumbent_)) return;

    int branch = -1;
    for (int j = 0; j < static_cast<int>(lower_.size()); ++j) {
      if (lower_[j] < upper_[j]) {
        branch = j;
        break;
      }
    }
    if (branch < 0) {
      // Propagation has already checked every row against the fixed point.
      incumbent_ = bound;
      has_incumbent_ = true;
      best_ = lower_;
      return;
    }

    const std::int64_t lo = lower_[branch];
    const std::int64_t hi = upper_[branch];
    const double c = cost_[branch];
    const bool descending = c < 0.0;
    // Bound computed with x at its best-case end; moving away worsens it by |c| per unit.
    for (std::int64_t step = 0; step <= hi - lo; ++step) {
      const std::int64_t value = descending ? hi - step : lo + step;
      const double candidate = bound + std::fabs(c) * static_cast<double>(step);
      if (has_incumbent_ && candidate >= incumbent_ - scaled_tol(incumbent_)) break;
      const std::size_t mark = trail_.size();
      set_bounds(branch, value, value);
      if (propagate_var(branch)) search();
      undo(mark);
      if (timed_out_) return;
    }
  }

  double objective_bound() const {
    double total = constant_;
    for (std::size_t j = 0; j < cost_.size(); ++j) {
      const double c = cost_[j];
      if (c > 0.0) {
        total += c * static_cast<double>(lower_[j]);
      } else if (c < 0.0) {
        total += c * static_cast<double>(upper_[j]);
      }
    }
    return total;
  }

  void set_bounds(int var, std::int64_t lo, std::int64_t hi) {
    trail_.push_back({var, lower_[var], upper_[var]});
    lower_[var] = lo;
    upper_[var] = hi;
  }

  void undo(std::size_t mark) {
    while (trail_.size() > mark) {
      const auto& e = trail_.back();
      lower_[e.var] = e.lower;
      upper_[e.var] = e.upper;
      trail_.pop_back();
    }
  }

  bool propagate_var(int var) { return propagate_rows(rows_of_var_[static_cast<std::size_t>(var)]); }

  bool propagate_rows(const std::vector<int>& seeds) {
    std::deque<int> queue;
    for (int r : seeds) {
      if (!queued_[r]) {
        queued_[r] = true;
        queue.push_back(r);
      }
    }
    bool ok = true;
    std::size_t processed = 0;
    const std::size_t cap = 64 * (rows_.size() + 1);
    while (!queue.empty()) {
      const int r = queue.front();
      queue.pop_front();
      queued_[r] = false;
      if (!ok) continue;
      // Tightening beyond the cap is skipped; feasibility checks still run.
      const bool tighten = ++processed <= cap;
      if (!tighten_row(r, queue, tighten)) ok = false;
    }
    return ok;
  }

  bool tighten_row(int r, std::deque<int>& queue, bool tighten) {
    const Row& row = rows_[r];
    double min_act = 0.0;
    double max_act = 0.0;
    for (std::size_t k = 0; k < row.vars.size(); ++k) {
      const double a = row.coefs[k];
      const double lo = static_cast<double>(lower_[row.vars[k]]);
      const double hi = static_cast<double>(upper_[row.vars[k]]);
      min_act += a > 0 ? a * lo : a * hi;
      max_act += a > 0 ? a * hi : a * lo;
    }
    if (std::isfinite(row.upper) && min_act > row.upper + scaled_tol(row.upper)) return false;
    if (std::isfinite(row.lower) && max_act < row.lower - scaled_tol(row.lower)) return false;
    if (!tighten) return true;

    for (std::size_t k = 0; k < row.vars.size(); ++k) {
      const int v = row.vars[k];
      const double a = row.coefs[k];
      const double lo = static_cast<double>(lower_[v]);
      const double hi = static_cast<double>(upper_[v]);
      const double rest_min = min_act - (a > 0 ? a * lo : a * hi);
      const double rest_max = max_act - (a > 0 ? a * hi : a * lo);
      std::int64_t new_lo = lower_[v];
      std::int64_t new_hi = upper_[v];
      if (std::isfinite(row.upper)) {
        const double limit = (row.upper - rest_min) / a;
        const double slack = scaled_tol(limit);
        if (a > 0) {
          new_hi = std::min<std::int64_t>(new_hi, static_cast<std::int64_t>(std::floor(limit + slack)));
        } else {
          new_lo = std::max<std::int64_t>(new_lo, static_cast<std::int64_t>(std::ceil(limit - slack)));
        }
      }
      if (std::isfinite(row.lower)) {
        const double limit = (row.lower - rest_max) / a;
        const double slack = scaled_tol(limit);
        if (a > 0) {
          new_lo = std::max<std::int64_t>(new_lo, static_cast<std::int64_t>(std::ceil(limit - slack)));
        } else {
          new_hi = std::min<std::int64_t>(new_hi, static_cast<std::int64_t>(std::floor(limit + slack)));
        }
      }
      if (new_lo > new_hi) return false;
      if (new_lo != lower_[v] || new_hi != upper_[v]) {
        set_bounds(v, new_lo, new_hi);
        for (int other : rows_of_var_[static_cast<std::size_t>(v)]) {
          if (other != r && !queued_[other]) {
            queued_[other] = true;
            queue.push_back(other);
          }
        }
        // Activities of this row changed; revisit it once more.
        if (!queued_[r]) {
          queued_[r] = true;
          queue.push_back(r);
        }
        return true;
      }
    }
    return true;
  }

  struct TrailEntry {
    int var;
    std::int64_t lower;
    std::int64_t upper;
  };

  const MipModel& model_;
  ReferenceOptions options_;
  std::vector<std::int64_t> lower_;
  std::vector<std::int64_t> upper_;
  std::vector<double> cost_;
  double constant_ = 0.0;
  std::vector<Row> rows_;
  std::vector<std::vector<int>> rows_of_var_;
  std::vector<bool> queued_;
  std::vector<TrailEntry> trail_;
  bool has_incumbent_ = false;
  double incumbent_ = kInfinity;
  std::vector<std::int64_t> best_;
  long long nodes_ = 0;
  bool timed_out_ = false;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

MipSolution reference_solve(const MipModel& model, const ReferenceOptions& options) {
  if (auto problems = model.validate(); !problems.empty()) throw MalformedModel(problems.front());
  DepthFirstSearch search(model, options);
  return search.run();
}

}  // namespace prodtrans::mip
