#include "prodtrans/mip/model.hpp"

#include <charconv>
#include <cmath>
#include <unordered_map>
#include <stdexcept>

namespace prodtrans::mip {

int MipModel::add_variable(std::string name, double lower, double upper, bool integer) {
  variables_.push_back({std::move(name), lower, upper, integer});
  return static_cast<int>(variables_.size()) - 1;
}

void MipModel::add_constraint(std::vector<Term> terms, Relation relation, double rhs, std::string name) {
  constraints_.push_back({std::move(terms), relation, rhs, std::move(name)});
}

void MipModel::set_objective(std::vector<Term> terms, double constant, Sense sense) {
  objective_ = std::move(terms);
  objective_constant_ = constant;
  sense_ = sense;
}

void MipModel::set_bounds(int var, double lower, double upper) {
  auto& v = variables_.at(static_cast<std::size_t>(var));
  v.lower = lower;
  v.upper = upper;
}

void MipModel::set_branch_priority(int var, int priority) {
  variables_.at(static_cast<std::size_t>(var)).branch_priority = priority;
}

std::vector<std::string> MipModel::validate() const {
  std::vector<std::string> problems;
  const int n = variable_count();
  for (int j = 0; j < n; ++j) {
    const auto& v = variables_[j];
    if (std::isnan(v.lower) || std::isnan(v.upper)) problems.push_back("variable " + v.name + ": NaN bound");
    if (v.lower > v.upper) problems.push_back("variable " + v.name + ": lower bound above upper bound");
  }
  auto check_terms = [&](std::span<const Term> terms, const std::string& where) {
    for (const auto& t : terms) {
      if (t.var < 0 || t.var >= n) problems.push_back(where + ": references undeclared variable " + std::to_string(t.var));
      if (!std::isfinite(t.coef)) problems.push_back(where + ": non-finite coefficient");
    }
  };
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    const auto& c = constraints_[i];
    const std::string where = "constraint " + (c.name.empty() ? std::to_string(i) : c.name);
    check_terms(c.terms, where);
    if (std::isnan(c.rhs)) problems.push_back(where + ": NaN right-hand side");
  }
  check_terms(objective_, "objective");
  if (!std::isfinite(objective_constant_)) problems.push_back("objective: non-finite constant");
  return problems;
}

double MipModel::evaluate_objective(std::span<const double> values) const {
  double total = objective_constant_;
  for (const auto& t : objective_) total += t.coef * values[static_cast<std::size_t>(t.var)];
  return total;
}

double MipModel::max_violation(std::span<const double> values) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < variables_.size(); ++j) {
    worst = std::max(worst, variables_[j].lower - values[j]);
    worst = std::max(worst, values[j] - variables_[j].upper);
  }
  for (const auto& c : constraints_) {
    double activity = 0.0;
    for (const auto& t : c.terms) activity += t.coef * values[static_cast<std::size_t>(t.var)];
    switch (c.relation) {
      case Relation::LessEqual: worst = std::max(worst, activity - c.rhs); break;
      case Relation::GreaterEqual: worst = std::max(worst, c.rhs - activity); break;
      case Relation::Equal: worst = std::max(worst, std::fabs(activity - c.rhs)); break;
    }
  }
  return worst;
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::TimeLimit: return "time_limit";
    case SolveStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

namespace {

std::string exact(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("cannot format coefficient");
  return std::string(buf, end);
}

std::string lp_name(const MipModel& model, int var) {
  const auto& name = model.variables()[static_cast<std::size_t>(var)].name;
  // LP format names may not start with a digit or contain spaces/brackets.
  std::string out = name.empty() ? "x" + std::to_string(var) : name;
  for (auto& c : out) {
    if (c == ' ' || c == '[' || c == ']' || c == ',' || c == ':' || c == '+' || c == '-' || c == '*' || c == '/' ||
        c == '<' || c == '>' || c == '=') {
      c = '_';
    }
  }
  if (std::isdigit(static_cast<unsigned char>(out.front())) || out.front() == '.') out.insert(0, "v");
  return out + "#" + std::to_string(var);
}

void write_terms(const MipModel& model, std::span<const Term> terms, std::ostream& out) {
  if (terms.empty()) {
    out << " 0 " << lp_name(model, 0);
    return;
  }
  // Readers disagree on repeated variables within one row, so merge them.
  std::vector<Term> merged;
  std::unordered_map<int, std::size_t> slot;
  for (const auto& t : terms) {
    auto [it, fresh] = slot.try_emplace(t.var, merged.size());
    if (fresh) {
      merged.push_back(t);
    } else {
      merged[it->second].coef += t.coef;
    }
  }
  for (const auto& t : merged) {
    out << (t.coef < 0 ? " - " : " + ") << exact(std::fabs(t.coef)) << ' ' << lp_name(model, t.var);
  }
}

}  // namespace

void write_lp_format(const MipModel& model, std::ostream& out) {
  out << "\\ generated by prodtrans\n";
  out << (model.sense() == Sense::Maximize ? "Maximize\n" : "Minimize\n");
  out << " obj:";
  if (model.objective().empty() && model.variable_count() == 0) {
    out << " 0";
  } else if (model.objective().empty()) {
    out << " 0 " << lp_name(model, 0);
  } else {
    write_terms(model, model.objective(), out);
  }
  if (model.objective_constant() != 0.0) {
    out << (model.objective_constant() < 0 ? " - " : " + ") << exact(std::fabs(model.objective_constant()));
  }
  out << "\nSubject To\n";
  const auto cons = model.constraints();
  for (std::size_t i = 0; i < cons.size(); ++i) {
    const auto& c = cons[i];
    out << " c" << i << ':';
    if (c.terms.empty()) {
      out << " 0 " << (model.variable_count() > 0 ? lp_name(model, 0) : std::string("x"));
    } else {
      write_terms(model, c.terms, out);
    }
    switch (c.relation) {
      case Relation::LessEqual: out << " <= "; break;
      case Relation::GreaterEqual: out << " >= "; break;
      case Relation::Equal: out << " = "; break;
    }
    out << exact(c.rhs) << '\n';
  }
  out << "Bounds\n";
  const auto vars = model.variables();
  for (int j = 0; j < model.variable_count(); ++j) {
    const auto& v = vars[static_cast<std::size_t>(j)];
    out << ' ';
    if (std::isinf(v.lower) && v.lower < 0) {
      out << "-inf";
    } else {
      out << exact(v.lower);
    }
    out << " <= " << lp_name(model, j) << " <= ";
    if (std::isinf(v.upper)) {
      out << "+inf";
    } else {
      out << exact(v.upper);
    }
    out << '\n';
  }
  bool any_int = false;
  for (int j = 0; j < model.variable_count(); ++j) {
    if (!vars[static_cast<std::size_t>(j)].integer) continue;
    if (!any_int) out << "General\n";
    any_int = true;
    out << ' ' << lp_name(model, j) << '\n';
  }
  out << "End\n";
}

}  // namespace prodtrans::mip
