#pragma once

#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace prodtrans::mip {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Relation { LessEqual, Equal, GreaterEqual };
enum class Sense { Minimize, Maximize };

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInfinity;
  bool integer = false;
  /// Among fractional integers of the same kind, higher priorities are branched on first.
  int branch_priority = 0;
};

struct Term {
  int var;
  double coef;
};

struct Constraint {
  std::vector<Term> terms;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
  std::string name;
};

/// Backend-neutral linear (mixed-)integer program.
class MipModel {
 public:
  int add_variable(std::string name, double lower, double upper, bool integer);
  int add_integer(std::string name, double lower, double upper) { return add_variable(std::move(name), lower, upper, true); }
  int add_binary(std::string name) { return add_variable(std::move(name), 0.0, 1.0, true); }

  void add_constraint(std::vector<Term> terms, Relation relation, double rhs, std::string name = {});
  void set_objective(std::vector<Term> terms, double constant, Sense sense);

  void set_bounds(int var, double lower, double upper);
  void set_branch_priority(int var, int priority);

  std::span<const Variable> variables() const { return variables_; }
  std::span<const Constraint> constraints() const { return constraints_; }
  std::span<const Term> objective() const { return objective_; }
  double objective_constant() const { return objective_constant_; }
  Sense sense() const { return sense_; }
  int variable_count() const { return static_cast<int>(variables_.size()); }
  int constraint_count() const { return static_cast<int>(constraints_.size()); }

  /// Structural problems: undeclared variable references, NaN data,
  /// inverted bounds. Empty when the model is well formed.
  std::vector<std::string> validate() const;

  /// Objective value of an assignment (including the constant).
  double evaluate_objective(std::span<const double> values) const;
  /// Largest absolute violation of any constraint or bound.
  double max_violation(std::span<const double> values) const;

 private:
  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  std::vector<Term> objective_;
  double objective_constant_ = 0.0;
  Sense sense_ = Sense::Minimize;
};

enum class SolveStatus { Optimal, Infeasible, TimeLimit, Unbounded };

const char* to_string(SolveStatus status);

struct MipSolution {
  SolveStatus status = SolveStatus::Infeasible;
  bool has_solution = false;
  std::vector<double> values;
  double objective = 0.0;
  /// Best proven bound on the optimum in the model's own sense.
  double bound = 0.0;
  long long nodes = 0;
};

/// Writes the model in CPLEX LP text format. Coefficients use the shortest
/// round-trip representation, so the file reproduces the model exactly.
void write_lp_format(const MipModel& model, std::ostream& out);

}  // namespace prodtrans::mip
