#pragma once

#include <stdexcept>
#include <vector>

#include "prodtrans/instance.hpp"
#include "prodtrans/mip/backend.hpp"

namespace prodtrans {

struct OracleLimits {
  long long max_leaves = 1'000'000;
  mip::ReferenceOptions follower;
};

class OracleLimitExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleResult {
  Money objective;
  LeaderDecision leader;
  std::vector<FollowerSolution> plans;
  long long leaves = 0;
  long long follower_solves = 0;
};

/// Exhaustive bilevel optimum for tiny instances. Every budget vector with
/// sum at most the total budget is paired with every capacity allocation the
/// budgets can pay for; each PD answers with an optimistic optimal plan found
/// by the reference solver on a model built here, independently of the
/// follower and master modules. Ties between leader decisions go to the
/// lexicographically smallest (budget, factory, engineering) vector.
/// Throws OracleLimitExceeded once more than max_leaves leaves are visited.
OracleResult brute_force_bilevel(const Instance& instance, const OracleLimits& limits = {});

}  // namespace prodtrans
