#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "prodtrans/generator.hpp"

namespace prodtrans::testing {

inline std::int64_t ceil_tenths(int horizon, int tenths) { return (std::int64_t{horizon} * tenths + 9) / 10; }

inline std::int64_t round_half_up_thirds(std::int64_t value) { return (2 * value + 3) / 6; }

inline constexpr std::int64_t kMarketRange[4][2] = {{2, 20}, {15, 20}, {20, 50}, {30, 150}};

/// Checks one demand series against the profile rules without knowing the market.
inline std::string demand_problem(const Quantities& d, bool is_new, int horizon) {
  const auto T = static_cast<std::int64_t>(d.size());
  if (T != horizon) return "wrong length";
  if (!is_new) {
    std::int64_t prefix = 0;
    while (prefix < T && d[static_cast<std::size_t>(prefix)] > 0) ++prefix;
    for (std::int64_t t = prefix; t < T; ++t) {
      if (d[static_cast<std::size_t>(t)] != 0) return "nonzero demand after the cutoff";
    }
    if (prefix < ceil_tenths(horizon, 4) || prefix > ceil_tenths(horizon, 7)) return "cutoff out of range";
    for (const auto& r : kMarketRange) {
      if (std::all_of(d.begin(), d.begin() + prefix, [&](auto v) { return v >= r[0] && v <= r[1]; })) return "";
    }
    return "pre-cutoff demand fits no single market";
  }
  std::int64_t start = 0;
  while (start < T && d[static_cast<std::size_t>(start)] == 0) ++start;
  const std::int64_t start_period = start + 1;
  if (start_period < ceil_tenths(horizon, 3) || start_period > ceil_tenths(horizon, 5)) return "ramp start out of range";
  for (const auto& r : kMarketRange) {
    bool fits = true;
    for (std::int64_t t = start; t < T && fits; ++t) {
      const std::int64_t step = std::min<std::int64_t>(t - start + 1, 3);
      const auto v = d[static_cast<std::size_t>(t)];
      fits = v >= round_half_up_thirds(r[0] * step) && v <= round_half_up_thirds(r[1] * step);
    }
    if (fits) return "";
  }
  return "ramp fits no single market";
}

/// Every distribution and structure bound a generated instance must satisfy.
/// Empty when conforming.
inline std::vector<std::string> generator_bound_violations(const Instance& inst, const GenConfig& c) {
  std::vector<std::string> out;
  auto fail = [&](std::string what) { out.push_back(std::move(what)); };
  const int T = c.horizon;
  const auto units = [](Money m, std::int64_t lo, std::int64_t hi) {
    return m.is_integral() && m.units() >= lo && m.units() <= hi;
  };
  if (inst.horizon != T) fail("horizon");
  if (static_cast<int>(inst.pd_count()) != c.n_pds) fail("PD count");
  if (static_cast<int>(inst.factory_cap.size()) != T || static_cast<int>(inst.eng_cap.size()) != T) {
    fail("capacity series length");
    return out;
  }
  if (!validate_instance(inst).empty()) fail("instance does not validate");

  std::vector<std::int64_t> demand(static_cast<std::size_t>(T), 0);
  for (const auto& pd : inst.pds) {
    if (static_cast<int>(pd.products.size()) != c.products_per_pd) fail(pd.id + ": product count");
    if (static_cast<int>(pd.new_product_count()) != c.new_per_pd) fail(pd.id + ": new product count");
    if (!units(pd.factory_unit_cost, 1, 10)) fail(pd.id + ": factory unit cost");
    if (!units(pd.eng_unit_cost, 50, 100)) fail(pd.id + ": engineering unit cost");
    for (const auto& p : pd.products) {
      for (int t = 0; t < T; ++t) {
        const auto i = static_cast<std::size_t>(t);
        if (p.holding_cost[i] != Money::from_units(1)) fail(p.id + ": holding cost");
        if (p.prod_cost[i] != p.holding_cost[i] * 2) fail(p.id + ": production cost is not 2h");
        if (p.backorder_cost[i] != p.holding_cost[i] * 10) fail(p.id + ": backorder cost is not 10h");
        if (!units(p.revenue[i], 20, 30)) fail(p.id + ": revenue out of range");
        if (!c.pi_per_period && p.revenue[i] != p.revenue[0]) fail(p.id + ": revenue varies over time");
        demand[i] += p.demand[i];
      }
      if (auto why = demand_problem(p.demand, p.is_new, T); !why.empty()) fail(p.id + ": " + why);
      if (!p.is_new && (p.dev_factory_req != 0 || p.dev_eng_req != 0)) fail(p.id + ": current product has development");
    }
  }

  std::int64_t factory_sum = 0, eng_sum = 0;
  for (int t = 0; t < T; ++t) {
    const auto i = static_cast<std::size_t>(t);
    const auto cf = inst.factory_cap[i];
    if (10 * cf < 7 * demand[i] || 10 * cf > 13 * demand[i]) fail("factory capacity ratio in period " + std::to_string(t + 1));
    if (inst.eng_cap[i] < 2 || inst.eng_cap[i] > 20) fail("engineering capacity in period " + std::to_string(t + 1));
    factory_sum += cf;
    eng_sum += inst.eng_cap[i];
  }

  // Some z >= 0.05 must explain both requirements of a new product at once.
  const double slots = static_cast<double>(T) * c.n_pds;
  const double af = static_cast<double>(factory_sum) / slots;
  const double ae = static_cast<double>(eng_sum) / slots;
  auto z_range = [](std::int64_t h, double mean) {
    // values of z for which max(1, round(mean * z)) == h
    const double lo = h == 1 ? 0.0 : (static_cast<double>(h) - 0.5) / mean;
    const double hi = (static_cast<double>(h) + 0.5) / mean;
    return std::pair{lo, hi};
  };
  for (const auto& pd : inst.pds) {
    for (const auto& p : pd.products) {
      if (!p.is_new) continue;
      if (p.dev_factory_req < 1 || p.dev_eng_req < 1) {
        fail(p.id + ": development requirement below 1");
        continue;
      }
      const auto [flo, fhi] = z_range(p.dev_factory_req, af);
      const auto [elo, ehi] = z_range(p.dev_eng_req, ae);
      const double lo = std::max({flo, elo, 0.05}) - 1e-9;
      const double hi = std::min(fhi, ehi) + 1e-9;
      if (lo > hi) fail(p.id + ": development requirements inconsistent with one multiplier");
    }
  }

  __int128 value = 0;
  for (const auto& pd : inst.pds) {
    value += static_cast<__int128>(pd.factory_unit_cost.units()) * factory_sum +
             static_cast<__int128>(pd.eng_unit_cost.units()) * eng_sum;
  }
  const auto bc = static_cast<__int128>(std::llround(c.budget_fraction * 1e6));
  const auto expected = static_cast<std::int64_t>((bc * value + 999'999) / 1'000'000);
  if (inst.total_budget != expected) fail("total budget");
  return out;
}

}  // namespace prodtrans::testing
