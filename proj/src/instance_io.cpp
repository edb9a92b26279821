#include "prodtrans/instance_io.hpp"

#include <fstream>
#include <sstream>

namespace prodtrans {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw InstanceFormatError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw InstanceFormatError(where + ": missing key '" + key + "'");
  return *it;
}

std::int64_t int_from_json(const json& v, const std::string& where) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    std::size_t used = 0;
    try {
      const long long parsed = std::stoll(s, &used);
      if (used == s.size()) return parsed;
    } catch (const std::exception&) {
    }
  }
  throw InstanceFormatError(where + ": expected a decimal integer");
}

Quantities ints_from_json(const json& v, const std::string& where) {
  if (!v.is_array()) throw InstanceFormatError(where + ": expected an array");
  Quantities out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(int_from_json(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Prices prices_from_json(const json& v, const std::string& where) {
  if (!v.is_array()) throw InstanceFormatError(where + ": expected an array");
  Prices out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(money_from_json(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

ordered_json prices_to_json(const Prices& prices) {
  ordered_json arr = ordered_json::array();
  for (auto p : prices) arr.push_back(money_to_json(p));
  return arr;
}

}  // namespace

ordered_json money_to_json(Money value) {
  if (value.is_integral()) return value.units();
  return value.to_string();
}

Money money_from_json(const json& value, const std::string& where) {
  try {
    if (value.is_number_integer()) return Money::from_units(value.get<std::int64_t>());
    if (value.is_number_float()) return Money::from_double(value.get<double>());
    if (value.is_string()) return Money::parse(value.get<std::string>());
  } catch (const std::exception& e) {
    throw InstanceFormatError(where + ": " + e.what());
  }
  throw InstanceFormatError(where + ": expected a number or decimal string");
}

ordered_json instance_to_json(const Instance& instance) {
  ordered_json doc;
  doc["horizon"] = instance.horizon;
  doc["total_budget"] = instance.total_budget;
  doc["factory_cap"] = instance.factory_cap;
  doc["eng_cap"] = instance.eng_cap;
  ordered_json pds = ordered_json::array();
  for (const auto& pd : instance.pds) {
    ordered_json p;
    p["id"] = pd.id;
    p["factory_unit_cost"] = money_to_json(pd.factory_unit_cost);
    p["eng_unit_cost"] = money_to_json(pd.eng_unit_cost);
    ordered_json products = ordered_json::array();
    for (const auto& prod : pd.products) {
      ordered_json q;
      q["id"] = prod.id;
      q["owner"] = prod.owner;
      q["is_new"] = prod.is_new;
      q["demand"] = prod.demand;
      q["revenue"] = prices_to_json(prod.revenue);
      q["prod_cost"] = prices_to_json(prod.prod_cost);
      q["backorder_cost"] = prices_to_json(prod.backorder_cost);
      q["holding_cost"] = prices_to_json(prod.holding_cost);
      if (prod.is_new) {
        q["dev_factory_req"] = prod.dev_factory_req;
        q["dev_eng_req"] = prod.dev_eng_req;
      }
      products.push_back(std::move(q));
    }
    p["products"] = std::move(products);
    pds.push_back(std::move(p));
  }
  doc["pds"] = std::move(pds);
  return doc;
}

Instance instance_from_json(const json& doc) {
  Instance inst;
  inst.horizon = static_cast<int>(int_from_json(require(doc, "horizon", "instance"), "horizon"));
  inst.total_budget = int_from_json(require(doc, "total_budget", "instance"), "total_budget");
  inst.factory_cap = ints_from_json(require(doc, "factory_cap", "instance"), "factory_cap");
  inst.eng_cap = ints_from_json(require(doc, "eng_cap", "instance"), "eng_cap");
  const auto& pds = require(doc, "pds", "instance");
  if (!pds.is_array()) throw InstanceFormatError("pds: expected an array");
  for (std::size_t j = 0; j < pds.size(); ++j) {
    const std::string where = "pds[" + std::to_string(j) + "]";
    const auto& p = pds[j];
    PDSpec pd;
    const auto& id = require(p, "id", where);
    if (!id.is_string()) throw InstanceFormatError(where + ".id: expected a string");
    pd.id = id.get<std::string>();
    pd.factory_unit_cost = money_from_json(require(p, "factory_unit_cost", where), where + ".factory_unit_cost");
    pd.eng_unit_cost = money_from_json(require(p, "eng_unit_cost", where), where + ".eng_unit_cost");
    const auto& products = require(p, "products", where);
    if (!products.is_array()) throw InstanceFormatError(where + ".products: expected an array");
    for (std::size_t n = 0; n < products.size(); ++n) {
      const std::string pw = where + ".products[" + std::to_string(n) + "]";
      const auto& q = products[n];
      ProductSpec prod;
      const auto& pid = require(q, "id", pw);
      if (!pid.is_string()) throw InstanceFormatError(pw + ".id: expected a string");
      prod.id = pid.get<std::string>();
      prod.owner = pd.id;
      if (auto it = q.find("owner"); it != q.end()) {
        if (!it->is_string()) throw InstanceFormatError(pw + ".owner: expected a string");
        prod.owner = it->get<std::string>();
      }
      if (auto it = q.find("is_new"); it != q.end()) {
        if (!it->is_boolean()) throw InstanceFormatError(pw + ".is_new: expected a boolean");
        prod.is_new = it->get<bool>();
      }
      prod.demand = ints_from_json(require(q, "demand", pw), pw + ".demand");
      prod.revenue = prices_from_json(require(q, "revenue", pw), pw + ".revenue");
      prod.prod_cost = prices_from_json(require(q, "prod_cost", pw), pw + ".prod_cost");
      prod.backorder_cost = prices_from_json(require(q, "backorder_cost", pw), pw + ".backorder_cost");
      prod.holding_cost = prices_from_json(require(q, "holding_cost", pw), pw + ".holding_cost");
      if (auto it = q.find("dev_factory_req"); it != q.end()) prod.dev_factory_req = int_from_json(*it, pw + ".dev_factory_req");
      if (auto it = q.find("dev_eng_req"); it != q.end()) prod.dev_eng_req = int_from_json(*it, pw + ".dev_eng_req");
      pd.products.push_back(std::move(prod));
    }
    inst.pds.push_back(std::move(pd));
  }
  return inst;
}

std::string dump_instance(const Instance& instance) { return instance_to_json(instance).dump(2) + "\n"; }

Instance read_instance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open instance file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InstanceFormatError(path.string() + ": " + e.what());
  }
  return instance_from_json(doc);
}

void write_instance(const Instance& instance, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write instance file " + path.string());
  out << dump_instance(instance);
}

ordered_json leader_to_json(const LeaderDecision& leader) {
  ordered_json doc;
  doc["budget"] = leader.budget;
  doc["factory_alloc"] = leader.factory_alloc;
  doc["eng_alloc"] = leader.eng_alloc;
  return doc;
}

ordered_json plan_to_json(const PDSpec& pd, const FollowerSolution& plan) {
  ordered_json doc;
  doc["pd"] = pd.id;
  doc["cost"] = money_to_json(plan.cost);
  doc["revenue"] = money_to_json(pd_revenue(pd, plan.backorder));
  ordered_json products = ordered_json::array();
  for (std::size_t n = 0; n < pd.products.size(); ++n) {
    ordered_json p;
    p["id"] = pd.products[n].id;
    p["production"] = plan.production[n];
    p["backorder"] = plan.backorder[n];
    p["inventory"] = plan.inventory[n];
    if (pd.products[n].is_new) p["dev_complete"] = plan.dev_complete[n];
    products.push_back(std::move(p));
  }
  doc["products"] = std::move(products);
  return doc;
}

}  // namespace prodtrans
