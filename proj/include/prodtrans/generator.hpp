#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "prodtrans/instance.hpp"

namespace prodtrans {

struct GenConfig {
  int horizon = 8;
  int n_pds = 2;
  int products_per_pd = 8;
  int new_per_pd = 2;
  double budget_fraction = 0.4;
  std::uint64_t seed = 1;
  /// Draw the unit revenue anew for every period instead of once per product.
  bool pi_per_period = false;
  /// Redraw factory capacities until they cover total demand over the horizon.
  bool require_capacity_cover = false;
};

/// Empty when the configuration is usable; otherwise one message per problem.
std::vector<std::string> config_violations(const GenConfig& config);

/// Independent, reproducible random stream for one parameter family and index
/// pair; families never share state, so adding products leaves others intact.
std::mt19937_64 rng_stream(std::uint64_t seed, std::uint64_t family, std::uint64_t a = 0, std::uint64_t b = 0);

/// Uniform integer in [lo, hi], defined independently of the standard library
/// distributions so that outputs match across platforms.
std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi);
double uniform_real(std::mt19937_64& rng, double lo, double hi);
double normal(std::mt19937_64& rng, double mean, double stddev);

/// Per-period demand of a product in market 1..4. Throws std::invalid_argument
/// for other markets or horizons below 1.
Quantities demand_profile(int market, bool is_new, int horizon, std::mt19937_64& rng);

/// Throws std::invalid_argument when config_violations is not empty.
Instance generate_instance(const GenConfig& config);

/// Caps factory and engineering capacities and the total budget, leaving the
/// rest untouched. Used to shrink generated instances to oracle size.
void clamp_instance(Instance& instance, std::int64_t max_factory, std::int64_t max_eng, std::int64_t max_budget);

struct GridEntry {
  std::string class_id;
  GenConfig config;
};

/// The 36 classes T x J x N_j x P_j = {8,12,16} x {2,4,8} x {8,12} x {2,6}
/// with Bc = 0.4, seeds 1..seeds_per_class. Classes are numbered C1.. with T
/// varying slowest.
std::vector<GridEntry> full_grid(int seeds_per_class = 5);

/// Desk-scale grid: T in {4,6}, J in {2,3}, N_j = 4, P_j = 2, Bc = 0.4,
/// seeds 1..seeds_per_class, classes D1..D4.
std::vector<GridEntry> desk_grid(int seeds_per_class = 3);

/// Competition pool: twelve products, six of them new, generated once per
/// seed as six PDs of one current and one new product, then merged into
/// `n_pds` PDs of consecutive pool members (n_pds must divide 6). Every PD
/// gets the same unit capacity costs and the total budget is fixed by the
/// pool, so classes differ only in how products are grouped.
Instance competition_instance(std::uint64_t seed, int horizon, int n_pds, double budget_fraction = 0.4);

/// PD counts of the competition classes, in class order.
inline constexpr int kCompetitionPdCounts[] = {6, 3, 2, 1};

}  // namespace prodtrans
