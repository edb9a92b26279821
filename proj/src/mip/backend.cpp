#include "prodtrans/mip/backend.hpp"

#include <cmath>
#include <cstdlib>

namespace prodtrans::mip {

namespace {

class BnbBackend final : public Backend {
 public:
  std::string_view name() const override { return "bnb"; }
  MipSolution solve(const MipModel& model, const SolveLimits& limits) const override {
    return branch_and_bound_solve(model, limits);
  }
};

class ReferenceBackend final : public Backend {
 public:
  std::string_view name() const override { return "reference"; }
  MipSolution solve(const MipModel& model, const SolveLimits& limits) const override {
    ReferenceOptions options;
    options.time_seconds = limits.time_seconds;
    return reference_solve(model, options);
  }
};

}  // namespace

std::shared_ptr<const Backend> make_backend(std::string_view name) {
  if (name == "bnb") return std::make_shared<BnbBackend>();
  if (name == "reference") return std::make_shared<ReferenceBackend>();
  throw BackendUnavailable("unknown MIP backend '" + std::string(name) + "' (available: bnb, reference)");
}

std::vector<std::string> backend_names() { return {"bnb", "reference"}; }

std::string default_backend_name() {
  if (const char* env = std::getenv(kBackendEnvVar); env != nullptr && *env != '\0') return env;
  return "bnb";
}

MipSolution solve(const MipModel& model, const SolveLimits& limits, const Backend& backend) {
  if (auto problems = model.validate(); !problems.empty()) throw MalformedModel(problems.front());
  MipSolution sol = backend.solve(model, limits);
  if (sol.has_solution) {
    const auto vars = model.variables();
    for (std::size_t j = 0; j < vars.size(); ++j) {
      if (vars[j].integer) sol.values[j] = std::round(sol.values[j]);
    }
    sol.objective = model.evaluate_objective(sol.values);
  }
  return sol;
}

}  // namespace prodtrans::mip
