#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "prodtrans/mip/model.hpp"

namespace prodtrans::mip {

struct SolveLimits {
  double time_seconds = kInfinity;
  /// Absolute optimality gap at which branch-and-bound stops.
  double absolute_gap = 1e-6;
  double relative_gap = 0.0;
};

class BackendUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedModel : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by the reference solver when the search exceeds its node budget.
class SearchBudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adapter contract for a MIP solver. Implementations hold no per-solve state,
/// so one instance may serve concurrent solves.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string_view name() const = 0;
  virtual MipSolution solve(const MipModel& model, const SolveLimits& limits) const = 0;
};

/// Known names: "bnb" (LP-based branch-and-bound, the default) and
/// "reference" (exhaustive depth-first search). Throws BackendUnavailable for
/// anything else.
std::shared_ptr<const Backend> make_backend(std::string_view name);

std::vector<std::string> backend_names();

/// Environment variable consulted by default_backend_name().
inline constexpr const char* kBackendEnvVar = "PRODTRANS_BACKEND";

/// Value of PRODTRANS_BACKEND when set and non-empty, otherwise "bnb".
std::string default_backend_name();

/// Validates the model, solves it with the backend, and snaps integer
/// variables of the returned point onto integers.
MipSolution solve(const MipModel& model, const SolveLimits& limits, const Backend& backend);

struct ReferenceOptions {
  long long max_nodes = 10'000'000;
  double time_seconds = kInfinity;
};

/// Exact optimum of a pure-integer model with finite bounds by depth-first
/// search in declaration order. Nodes are pruned by bound propagation on the
/// partial assignment and by an objective bound built from variable bounds.
/// Among optimal points the first one reached is returned, so results are
/// deterministic. Throws SearchBudgetExceeded instead of returning an
/// approximate answer, MalformedModel for continuous or unbounded variables.
MipSolution reference_solve(const MipModel& model, const ReferenceOptions& options = {});

/// LP-based branch-and-bound over a bounded dual simplex. Continuous
/// variables are allowed; integer variables need finite bounds.
MipSolution branch_and_bound_solve(const MipModel& model, const SolveLimits& limits);

}  // namespace prodtrans::mip
