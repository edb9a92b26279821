#include "prodtrans/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace prodtrans {

namespace {

enum Family : std::uint64_t {
  kMarket = 1,
  kDemand,
  kRevenue,
  kFactoryCap,
  kEngCap,
  kDevelopment,
  kUnitCost,
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::int64_t ceil_fraction(std::int64_t numerator, std::int64_t denominator) {
  return (numerator + denominator - 1) / denominator;
}

// ceil(k * T / 10) without floating point
std::int64_t period_fraction(int horizon, int tenths) { return ceil_fraction(std::int64_t{horizon} * tenths, 10); }

std::int64_t to_millionths(double fraction) { return std::llround(fraction * 1e6); }

std::int64_t total_demand_in(const std::vector<PDSpec>& pds, std::size_t t) {
  std::int64_t d = 0;
  for (const auto& pd : pds) {
    for (const auto& p : pd.products) d += p.demand[t];
  }
  return d;
}

// ceil(Bc * sum of the capacity value) with Bc held as integer millionths.
std::int64_t budget_from(std::int64_t fraction_millionths, Money capacity_value) {
  const auto scaled = static_cast<__int128>(capacity_value.micros()) * fraction_millionths;
  const __int128 denominator = static_cast<__int128>(Money::kScale) * 1'000'000;
  return static_cast<std::int64_t>((scaled + denominator - 1) / denominator);
}

std::string pd_id(int j) { return "PD" + std::to_string(j + 1); }

}  // namespace

std::vector<std::string> config_violations(const GenConfig& c) {
  std::vector<std::string> out;
  if (c.horizon < 2) out.emplace_back("horizon must be at least 2");
  if (c.n_pds < 1) out.emplace_back("n_pds must be at least 1");
  if (c.products_per_pd < 1) out.emplace_back("products_per_pd must be at least 1");
  if (c.new_per_pd < 0) out.emplace_back("new_per_pd must be nonnegative");
  if (c.new_per_pd > c.products_per_pd) out.emplace_back("new_per_pd must not exceed products_per_pd");
  if (!(c.budget_fraction > 0.0) || !std::isfinite(c.budget_fraction)) {
    out.emplace_back("budget_fraction must be positive");
  }
  return out;
}

std::mt19937_64 rng_stream(std::uint64_t seed, std::uint64_t family, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ family);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  return std::mt19937_64(h);
}

std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(rng());
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return lo + static_cast<std::int64_t>(x % span);
}

double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

double normal(std::mt19937_64& rng, double mean, double stddev) {
  // Box-Muller; 1 - u keeps the logarithm finite.
  const double u1 = 1.0 - uniform_real(rng, 0.0, 1.0);
  const double u2 = uniform_real(rng, 0.0, 1.0);
  return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Quantities demand_profile(int market, bool is_new, int horizon, std::mt19937_64& rng) {
  static constexpr std::int64_t kRange[4][2] = {{2, 20}, {15, 20}, {20, 50}, {30, 150}};
  if (market < 1 || market > 4) throw std::invalid_argument("demand_profile: market must be in 1..4");
  if (horizon < 1) throw std::invalid_argument("demand_profile: horizon must be positive");
  const auto [lo, hi] = kRange[market - 1];
  Quantities level(static_cast<std::size_t>(horizon));
  for (auto& v : level) v = uniform_int(rng, lo, hi);

  Quantities out(level.size(), 0);
  if (!is_new) {
    const auto cutoff = uniform_int(rng, period_fraction(horizon, 4), period_fraction(horizon, 7));
    for (std::int64_t t = 1; t <= horizon; ++t) {
      if (t <= cutoff) out[static_cast<std::size_t>(t - 1)] = level[static_cast<std::size_t>(t - 1)];
    }
    return out;
  }
  const auto start = uniform_int(rng, period_fraction(horizon, 3), period_fraction(horizon, 5));
  for (std::int64_t t = start; t <= horizon; ++t) {
    const auto i = static_cast<std::size_t>(t - 1);
    const std::int64_t step = std::min<std::int64_t>(t - start + 1, 3);
    // level * step / 3, rounded half up
    out[i] = (level[i] * step * 2 + 3) / 6;
  }
  return out;
}

Instance generate_instance(const GenConfig& config) {
  if (auto v = config_violations(config); !v.empty()) throw std::invalid_argument("generate_instance: " + v.front());
  const int T = config.horizon;
  const auto periods = static_cast<std::size_t>(T);
  const std::uint64_t seed = config.seed;

  Instance inst;
  inst.horizon = T;
  for (int j = 0; j < config.n_pds; ++j) {
    PDSpec pd;
    pd.id = pd_id(j);
    auto costs = rng_stream(seed, kUnitCost, static_cast<std::uint64_t>(j));
    pd.factory_unit_cost = Money::from_units(uniform_int(costs, 1, 10));
    pd.eng_unit_cost = Money::from_units(uniform_int(costs, 50, 100));
    for (int n = 0; n < config.products_per_pd; ++n) {
      const auto a = static_cast<std::uint64_t>(j);
      const auto b = static_cast<std::uint64_t>(n);
      ProductSpec p;
      p.id = pd.id + "-P" + std::to_string(n + 1);
      p.owner = pd.id;
      // The last new_per_pd products of each PD are the new ones.
      p.is_new = n >= config.products_per_pd - config.new_per_pd;
      auto market_rng = rng_stream(seed, kMarket, a, b);
      const auto market = static_cast<int>(uniform_int(market_rng, 1, 4));
      auto demand_rng = rng_stream(seed, kDemand, a, b);
      p.demand = demand_profile(market, p.is_new, T, demand_rng);
      auto revenue_rng = rng_stream(seed, kRevenue, a, b);
      if (config.pi_per_period) {
        for (std::size_t t = 0; t < periods; ++t) p.revenue.push_back(Money::from_units(uniform_int(revenue_rng, 20, 30)));
      } else {
        p.revenue.assign(periods, Money::from_units(uniform_int(revenue_rng, 20, 30)));
      }
      p.holding_cost.assign(periods, Money::from_units(1));
      p.prod_cost.assign(periods, Money::from_units(2));
      p.backorder_cost.assign(periods, Money::from_units(10));
      pd.products.push_back(std::move(p));
    }
    inst.pds.push_back(std::move(pd));
  }

  std::int64_t demand_total = 0;
  for (std::size_t t = 0; t < periods; ++t) demand_total += total_demand_in(inst.pds, t);
  for (std::uint64_t attempt = 0;; ++attempt) {
    auto cap_rng = rng_stream(seed, kFactoryCap, attempt);
    inst.factory_cap.assign(periods, 0);
    std::int64_t cap_total = 0;
    for (std::size_t t = 0; t < periods; ++t) {
      const std::int64_t d = total_demand_in(inst.pds, t);
      const double u = uniform_real(cap_rng, 0.7, 1.3);
      // Rounding may leave the ratio interval; clamp back into it.
      const auto c = std::llround(u * static_cast<double>(d));
      inst.factory_cap[t] = std::clamp<std::int64_t>(c, ceil_fraction(7 * d, 10), 13 * d / 10);
      cap_total += inst.factory_cap[t];
    }
    if (!config.require_capacity_cover || cap_total >= demand_total) break;
    if (attempt >= 10'000) throw std::runtime_error("generate_instance: no capacity draw covers total demand");
  }
  auto eng_rng = rng_stream(seed, kEngCap);
  for (std::size_t t = 0; t < periods; ++t) inst.eng_cap.push_back(uniform_int(eng_rng, 2, 20));

  std::int64_t factory_sum = 0;
  std::int64_t eng_sum = 0;
  for (std::size_t t = 0; t < periods; ++t) {
    factory_sum += inst.factory_cap[t];
    eng_sum += inst.eng_cap[t];
  }
  const double slots = static_cast<double>(T) * config.n_pds;
  const double mean_factory = static_cast<double>(factory_sum) / slots;
  const double mean_eng = static_cast<double>(eng_sum) / slots;
  for (std::size_t j = 0; j < inst.pds.size(); ++j) {
    for (std::size_t n = 0; n < inst.pds[j].products.size(); ++n) {
      auto& p = inst.pds[j].products[n];
      if (!p.is_new) continue;
      auto dev_rng = rng_stream(seed, kDevelopment, j, n);
      double z = normal(dev_rng, 0.4, 0.2);
      while (z < 0.05) z = normal(dev_rng, 0.4, 0.2);
      p.dev_factory_req = std::max<std::int64_t>(1, std::llround(mean_factory * z));
      p.dev_eng_req = std::max<std::int64_t>(1, std::llround(mean_eng * z));
    }
  }

  Money capacity_value;
  for (const auto& pd : inst.pds) {
    capacity_value += pd.factory_unit_cost * factory_sum + pd.eng_unit_cost * eng_sum;
  }
  inst.total_budget = budget_from(to_millionths(config.budget_fraction), capacity_value);
  return inst;
}

void clamp_instance(Instance& instance, std::int64_t max_factory, std::int64_t max_eng, std::int64_t max_budget) {
  for (auto& c : instance.factory_cap) c = std::min(c, max_factory);
  for (auto& c : instance.eng_cap) c = std::min(c, max_eng);
  instance.total_budget = std::min(instance.total_budget, max_budget);
}

std::vector<GridEntry> full_grid(int seeds_per_class) {
  std::vector<GridEntry> out;
  int id = 0;
  for (int T : {8, 12, 16}) {
    for (int J : {2, 4, 8}) {
      for (int N : {8, 12}) {
        for (int P : {2, 6}) {
          ++id;
          for (int s = 1; s <= seeds_per_class; ++s) {
            out.push_back({"C" + std::to_string(id), {T, J, N, P, 0.4, static_cast<std::uint64_t>(s)}});
          }
        }
      }
    }
  }
  return out;
}

std::vector<GridEntry> desk_grid(int seeds_per_class) {
  std::vector<GridEntry> out;
  int id = 0;
  for (int T : {4, 6}) {
    for (int J : {2, 3}) {
      ++id;
      for (int s = 1; s <= seeds_per_class; ++s) {
        out.push_back({"D" + std::to_string(id), {T, J, 4, 2, 0.4, static_cast<std::uint64_t>(s)}});
      }
    }
  }
  return out;
}

Instance competition_instance(std::uint64_t seed, int horizon, int n_pds, double budget_fraction) {
  constexpr int kPool = 6;
  if (n_pds < 1 || kPool % n_pds != 0) throw std::invalid_argument("competition_instance: PD count must divide 6");
  GenConfig pool_config{horizon, kPool, 2, 1, budget_fraction, seed};
  const Instance pool = generate_instance(pool_config);
  const Money factory_cost = pool.pds.front().factory_unit_cost;
  const Money eng_cost = pool.pds.front().eng_unit_cost;

  Instance inst;
  inst.horizon = pool.horizon;
  inst.factory_cap = pool.factory_cap;
  inst.eng_cap = pool.eng_cap;
  const int group = kPool / n_pds;
  for (int j = 0; j < n_pds; ++j) {
    PDSpec pd;
    pd.id = pd_id(j);
    pd.factory_unit_cost = factory_cost;
    pd.eng_unit_cost = eng_cost;
    for (int k = j * group; k < (j + 1) * group; ++k) {
      for (auto p : pool.pds[static_cast<std::size_t>(k)].products) {
        p.owner = pd.id;
        pd.products.push_back(std::move(p));
      }
    }
    inst.pds.push_back(std::move(pd));
  }
  std::int64_t factory_sum = 0;
  std::int64_t eng_sum = 0;
  for (std::size_t t = 0; t < inst.factory_cap.size(); ++t) {
    factory_sum += inst.factory_cap[t];
    eng_sum += inst.eng_cap[t];
  }
  inst.total_budget = budget_from(to_millionths(budget_fraction), factory_cost * factory_sum + eng_cost * eng_sum);
  return inst;
}

}  // namespace prodtrans
