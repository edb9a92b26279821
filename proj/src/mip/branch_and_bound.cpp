#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>

#include "dual_simplex.hpp"
#include "prodtrans/mip/backend.hpp"

namespace prodtrans::mip {

namespace {

constexpr double kIntTol = 1e-6;
constexpr double kFeasTol = 1e-6;
/// Stand-in for infinite bounds of continuous variables.
constexpr double kLargeBound = 1e9;

struct Node {
  std::vector<double> lower;  // per integer variable
  std::vector<double> upper;
  double parent_bound;
  int depth;
  int branched = -1;  // integer variable index fixed by the last branch
  bool went_up = false;
  double distance = 0.0;  // how far that branch moved the LP value
};

class BranchAndBound {
 public:
  BranchAndBound(const MipModel& model, const SolveLimits& limits) : model_(model), limits_(limits) {
    sign_ = model.sense() == Sense::Maximize ? -1.0 : 1.0;
    const int n = model.variable_count();
    detail::LpData data;
    data.rows = model.constraint_count();
    data.cols = n;
    data.columns.resize(static_cast<std::size_t>(n));
    data.col_lower.resize(static_cast<std::size_t>(n));
    data.col_upper.resize(static_cast<std::size_t>(n));
    data.cost.assign(static_cast<std::size_t>(n), 0.0);
    clamped_.assign(static_cast<std::size_t>(n), false);
    for (int j = 0; j < n; ++j) {
      const auto& v = model.variables()[static_cast<std::size_t>(j)];
      double lo = v.lower;
      double hi = v.upper;
      if (v.integer) {
        if (!std::isfinite(lo) || !std::isfinite(hi)) {
          throw MalformedModel("branch_and_bound: integer variable " + v.name + " needs finite bounds");
        }
        lo = std::ceil(lo - kIntTol);
        hi = std::floor(hi + kIntTol);
        int_vars_.push_back(j);
      }
      if (!std::isfinite(lo)) {
        lo = -kLargeBound;
        clamped_[j] = true;
      }
      if (!std::isfinite(hi)) {
        hi = kLargeBound;
        clamped_[j] = true;
      }
      data.col_lower[j] = lo;
      data.col_upper[j] = hi;
      if (lo > hi) infeasible_bounds_ = true;
    }
    for (const auto& t : model.objective()) data.cost[t.var] += sign_ * t.coef;

    objective_integral_ = true;
    for (int j = 0; j < n; ++j) {
      const double c = data.cost[j];
      if (c == 0.0) continue;
      if (!model.variables()[static_cast<std::size_t>(j)].integer || std::fabs(c - std::round(c)) > 1e-12) {
        objective_integral_ = false;
      }
    }

    data.row_lower.resize(static_cast<std::size_t>(data.rows));
    data.row_upper.resize(static_cast<std::size_t>(data.rows));
    const auto cons = model.constraints();
    for (int i = 0; i < data.rows; ++i) {
      const auto& c = cons[static_cast<std::size_t>(i)];
      std::map<int, double> merged;
      for (const auto& t : c.terms) merged[t.var] += t.coef;
      for (const auto& [var, coef] : merged) {
        if (coef != 0.0) data.columns[var].push_back({i, coef});
      }
      data.row_lower[i] = c.relation == Relation::LessEqual ? -kInfinity : c.rhs;
      data.row_upper[i] = c.relation == Relation::GreaterEqual ? kInfinity : c.rhs;
      // Integer activity: the row's logical is an integer variable too.
      bool integral = true;
      for (const auto& [var, coef] : merged) {
        if (!model.variables()[static_cast<std::size_t>(var)].integer || coef != std::round(coef)) integral = false;
      }
      integral_rows_.push_back(integral);
      if (integral) {
        data.row_lower[i] = std::ceil(data.row_lower[i] - kFeasTol);
        data.row_upper[i] = std::floor(data.row_upper[i] + kFeasTol);
      }
    }
    root_lower_.reserve(int_vars_.size());
    root_upper_.reserve(int_vars_.size());
    for (int j : int_vars_) {
      root_lower_.push_back(data.col_lower[j]);
      root_upper_.push_back(data.col_upper[j]);
      binary_.push_back(data.col_lower[j] == 0.0 && data.col_upper[j] == 1.0);
    }
    for (int side = 0; side < 2; ++side) {
      pc_sum_[side].assign(int_vars_.size(), 0.0);
      pc_count_[side].assign(int_vars_.size(), 0);
    }
    // binaries first, then the model's branching priority
    for (int j : int_vars_) {
      const auto k = priority_.size();
      priority_.push_back((binary_[k] ? 1 << 20 : 0) + model.variables()[static_cast<std::size_t>(j)].branch_priority);
    }
    is_integer_.assign(static_cast<std::size_t>(n), 0);
    for (int j : int_vars_) is_integer_[static_cast<std::size_t>(j)] = 1;
    data_ = std::move(data);
    lp_.emplace(data_);
  }

  MipSolution run() {
    const auto start = std::chrono::steady_clock::now();
    const auto deadline = std::isfinite(limits_.time_seconds)
                              ? start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                            std::chrono::duration<double>(limits_.time_seconds))
                              : std::chrono::steady_clock::time_point::max();

    if (!infeasible_bounds_) add_root_cuts(deadline);
    std::vector<Node> open;
    std::optional<Node> next;
    if (!infeasible_bounds_) next = Node{root_lower_, root_upper_, -kInfinity, 0};
    bool timed_out = false;
    bool unbounded = false;

    while (next || !open.empty()) {
      if (has_incumbent_ && gap_closed(open, next)) break;
      if (std::chrono::steady_clock::now() > deadline) {
        timed_out = true;
        break;
      }
      Node node = take(open, next);
      if (has_incumbent_ && node.parent_bound >= cutoff()) continue;
      ++nodes_;
      apply(node);
      auto status = lp_->solve(has_incumbent_ ? cutoff() : kInfinity, deadline);
      if (status == detail::LpStatus::IterationLimit || status == detail::LpStatus::Numerical) {
        // start over from the slack basis, away from the troubled factorization
        lp_.emplace(data_);
        apply(node);
        status = lp_->solve(has_incumbent_ ? cutoff() : kInfinity, deadline);
      }
      if (status == detail::LpStatus::TimeLimit) {
        open.push_back(std::move(node));
        timed_out = true;
        break;
      }
      if (status == detail::LpStatus::IterationLimit || status == detail::LpStatus::Numerical) {
        throw std::runtime_error("branch_and_bound: LP solve failed numerically");
      }
      if (status != detail::LpStatus::Optimal) continue;
      const double z = lp_->objective();
      if (has_incumbent_ && z >= cutoff()) continue;
      const auto x = lp_->column_values();

      for (std::size_t j = 0; j < x.size(); ++j) {
        if (clamped_[j] && std::fabs(x[j]) >= kLargeBound * 0.5) unbounded = true;
      }
      if (unbounded) break;

      if (node.branched >= 0) record_pseudocost(node, z);

      // Pseudocost product score within the highest priority class present.
      int branch = -1;
      double best_score = -1.0;
      int best_class = -1;
      for (std::size_t k = 0; k < int_vars_.size(); ++k) {
        const double v = x[int_vars_[k]];
        const double f = v - std::floor(v);
        if (std::min(f, 1.0 - f) <= kIntTol) continue;
        const int cls = priority_[k];
        if (cls < best_class) continue;
        const double score = std::max(pseudocost(k, false) * f, 1e-6) * std::max(pseudocost(k, true) * (1.0 - f), 1e-6);
        if (cls > best_class || score > best_score) {
          best_score = score;
          best_class = cls;
          branch = static_cast<int>(k);
        }
      }
      if (branch < 0) {
        offer(x, /*round=*/true);
        continue;
      }
      if (nodes_ % 4 == 1) offer(x, /*round=*/true);

      if (has_incumbent_) fix_by_reduced_cost(node, x, z);

      const double v = x[int_vars_[branch]];
      Node down = node;
      Node up = std::move(node);
      down.upper[branch] = std::floor(v);
      up.lower[branch] = std::ceil(v);
      down.parent_bound = up.parent_bound = z;
      ++down.depth;
      ++up.depth;
      down.branched = up.branched = branch;
      down.went_up = false;
      up.went_up = true;
      down.distance = v - std::floor(v);
      up.distance = std::ceil(v) - v;
      const bool prefer_up = v - std::floor(v) >= 0.5;
      if (prefer_up) {
        next = std::move(up);
        open.push_back(std::move(down));
      } else {
        next = std::move(down);
        open.push_back(std::move(up));
      }
    }

    MipSolution out;
    out.nodes = nodes_;
    if (unbounded) {
      out.status = SolveStatus::Unbounded;
      out.bound = sign_ * -kInfinity;
      out.objective = out.bound;
      return out;
    }
    double best_open = has_incumbent_ ? incumbent_ : kInfinity;
    if (timed_out) {
      if (next) best_open = std::min(best_open, next->parent_bound);
      for (const auto& n : open) best_open = std::min(best_open, n.parent_bound);
    }
    out.status = timed_out ? SolveStatus::TimeLimit : (has_incumbent_ ? SolveStatus::Optimal : SolveStatus::Infeasible);
    if (has_incumbent_) {
      out.has_solution = true;
      out.values = best_;
      out.objective = model_.evaluate_objective(out.values);
    }
    const double constant = model_.objective_constant();
    if (std::isfinite(best_open)) {
      out.bound = has_incumbent_ && !timed_out ? out.objective : sign_ * best_open + constant;
    } else {
      out.bound = sign_ * best_open;
    }
    if (!has_incumbent_) out.objective = out.bound;
    return out;
  }

 private:
  /// A few rounds of Gomory cuts at the root, appended as rows of the LP.
  /// Cuts that end up slack are dropped again to keep node LPs small.
  void add_root_cuts(detail::DualSimplex::Clock::time_point deadline) {
    constexpr int kRounds = 40;
    constexpr int kPerRound = 50;
    const int first_cut = data_.rows;
    const int cap = std::max(200, 4 * data_.rows);
    int added = 0;
    double last = -kInfinity;
    bool solved = false;
    for (int round = 0; round < kRounds && added < cap; ++round) {
      solved = lp_->solve(kInfinity, deadline) == detail::LpStatus::Optimal;
      if (!solved) break;
      const double z = lp_->objective();
      if (round > 0 && z - last < 1e-6 * std::max(1.0, std::fabs(z))) break;
      last = z;
      std::vector<char> integral = is_integer_;
      integral.resize(static_cast<std::size_t>(data_.cols + data_.rows), 0);
      for (std::size_t i = 0; i < integral_rows_.size(); ++i) integral[static_cast<std::size_t>(data_.cols) + i] = integral_rows_[i];
      auto cuts = lp_->gomory_cuts(integral, std::min(kPerRound, cap - added));
      if (cuts.empty()) break;
      for (const auto& cut : cuts) {
        const int r = data_.rows++;
        for (const auto& [j, c] : cut.terms) data_.columns[static_cast<std::size_t>(j)].push_back({r, c});
        data_.row_lower.push_back(cut.rhs);
        data_.row_upper.push_back(kInfinity);
      }
      added += static_cast<int>(cuts.size());
      lp_.emplace(data_);
      solved = false;
    }
    if (added == 0) return;
    if (!solved && lp_->solve(kInfinity, deadline) != detail::LpStatus::Optimal) return;

    const auto x = lp_->column_values();
    std::vector<double> activity(static_cast<std::size_t>(data_.rows), 0.0);
    for (int j = 0; j < data_.cols; ++j) {
      for (const auto& [i, a] : data_.columns[static_cast<std::size_t>(j)]) activity[static_cast<std::size_t>(i)] += a * x[static_cast<std::size_t>(j)];
    }
    std::vector<int> renumber(static_cast<std::size_t>(data_.rows), -1);
    int rows = 0;
    for (int i = 0; i < data_.rows; ++i) {
      const double lo = data_.row_lower[static_cast<std::size_t>(i)];
      const bool slack = i >= first_cut && activity[static_cast<std::size_t>(i)] > lo + 1e-6 * std::max(1.0, std::fabs(lo));
      if (slack) continue;
      data_.row_lower[static_cast<std::size_t>(rows)] = lo;
      data_.row_upper[static_cast<std::size_t>(rows)] = data_.row_upper[static_cast<std::size_t>(i)];
      renumber[static_cast<std::size_t>(i)] = rows++;
    }
    if (rows == data_.rows) return;
    data_.rows = rows;
    data_.row_lower.resize(static_cast<std::size_t>(rows));
    data_.row_upper.resize(static_cast<std::size_t>(rows));
    for (auto& column : data_.columns) {
      std::erase_if(column, [&](const auto& e) { return renumber[static_cast<std::size_t>(e.first)] < 0; });
      for (auto& e : column) e.first = renumber[static_cast<std::size_t>(e.first)];
    }
    lp_.emplace(data_);
  }

  void record_pseudocost(const Node& node, double z) {
    if (!std::isfinite(node.parent_bound) || node.distance <= 0.0) return;
    const auto k = static_cast<std::size_t>(node.branched);
    const int side = node.went_up ? 1 : 0;
    const double gain = std::max(z - node.parent_bound, 0.0) / node.distance;
    pc_sum_[side][k] += gain;
    ++pc_count_[side][k];
    pc_total_[side] += gain;
    ++pc_total_count_[side];
  }

  double pseudocost(std::size_t k, bool up) const {
    const int side = up ? 1 : 0;
    if (pc_count_[side][k] > 0) return pc_sum_[side][k] / pc_count_[side][k];
    return pc_total_count_[side] > 0 ? pc_total_[side] / pc_total_count_[side] : 1.0;
  }

  double cutoff() const {
    if (objective_integral_) return incumbent_ - 1.0 + kIntTol;
    return incumbent_ - std::max(limits_.absolute_gap, limits_.relative_gap * std::fabs(incumbent_));
  }

  bool gap_closed(const std::vector<Node>& open, const std::optional<Node>& next) const {
    double best = next ? next->parent_bound : kInfinity;
    for (const auto& n : open) best = std::min(best, n.parent_bound);
    return best >= cutoff();
  }

  Node take(std::vector<Node>& open, std::optional<Node>& next) {
    if (next) {
      Node n = std::move(*next);
      next.reset();
      return n;
    }
    std::size_t pick = 0;
    for (std::size_t i = 1; i < open.size(); ++i) {
      const auto& a = open[i];
      const auto& b = open[pick];
      if (a.parent_bound < b.parent_bound || (a.parent_bound == b.parent_bound && a.depth > b.depth)) pick = i;
    }
    Node n = std::move(open[pick]);
    open[pick] = std::move(open.back());
    open.pop_back();
    return n;
  }

  /// Moving a nonbasic integer column by delta costs at least |d| * delta, so
  /// columns whose move would cross the cutoff get tighter bounds in the subtree.
  void fix_by_reduced_cost(Node& node, const std::vector<double>& x, double z) const {
    const double room = cutoff() - z;
    if (!(room >= 0.0)) return;
    for (std::size_t k = 0; k < int_vars_.size(); ++k) {
      const int j = int_vars_[k];
      const double d = lp_->reduced_cost(j);
      if (std::fabs(d) < 1e-7) continue;
      const double reach = std::floor(room / std::fabs(d) + 1e-6);
      const double at = x[static_cast<std::size_t>(j)];
      if (d > 0.0 && std::fabs(at - node.lower[k]) < kIntTol) {
        node.upper[k] = std::min(node.upper[k], node.lower[k] + reach);
      } else if (d < 0.0 && std::fabs(at - node.upper[k]) < kIntTol) {
        node.lower[k] = std::max(node.lower[k], node.upper[k] - reach);
      }
    }
  }

  void apply(const Node& node) {
    for (std::size_t k = 0; k < int_vars_.size(); ++k) {
      const int j = int_vars_[k];
      if (lp_->column_lower(j) != node.lower[k] || lp_->column_upper(j) != node.upper[k]) {
        lp_->set_column_bounds(j, node.lower[k], node.upper[k]);
      }
    }
  }

  void offer(const std::vector<double>& x, bool round) {
    std::vector<double> candidate = x;
    if (round) {
      for (int j : int_vars_) candidate[j] = std::round(candidate[j]);
    }
    if (model_.max_violation(candidate) > kFeasTol) return;
    double z = 0.0;
    for (const auto& t : model_.objective()) z += sign_ * t.coef * candidate[static_cast<std::size_t>(t.var)];
    if (!has_incumbent_ || z < incumbent_ - 1e-9) {
      has_incumbent_ = true;
      incumbent_ = z;
      best_ = std::move(candidate);
    }
  }

  const MipModel& model_;
  SolveLimits limits_;
  double sign_ = 1.0;
  detail::LpData data_;
  std::optional<detail::DualSimplex> lp_;
  std::vector<char> is_integer_;
  std::vector<char> integral_rows_;
  std::vector<int> priority_;
  std::vector<double> pc_sum_[2];
  std::vector<long long> pc_count_[2];
  double pc_total_[2] = {0.0, 0.0};
  long long pc_total_count_[2] = {0, 0};
  std::vector<int> int_vars_;
  std::vector<bool> clamped_;
  std::vector<double> root_lower_;
  std::vector<double> root_upper_;
  std::vector<bool> binary_;
  bool infeasible_bounds_ = false;
  bool objective_integral_ = false;
  bool has_incumbent_ = false;
  double incumbent_ = kInfinity;
  std::vector<double> best_;
  long long nodes_ = 0;
};

}  // namespace

MipSolution branch_and_bound_solve(const MipModel& model, const SolveLimits& limits) {
  if (auto problems = model.validate(); !problems.empty()) throw MalformedModel(problems.front());
  BranchAndBound search(model, limits);
  return search.run();
}

}  // namespace prodtrans::mip
