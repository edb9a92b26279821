#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "prodtrans/instance.hpp"

namespace prodtrans {

/// Raised for documents that do not follow the instance schema (missing keys,
/// wrong JSON types, inexact money). Structural rule violations on a
/// well-typed document are reported by validate_instance instead.
class InstanceFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::ordered_json money_to_json(Money value);
Money money_from_json(const nlohmann::json& value, const std::string& where);

nlohmann::ordered_json instance_to_json(const Instance& instance);
Instance instance_from_json(const nlohmann::json& doc);

/// Canonical text form: two-space indentation, LF line endings, trailing newline.
std::string dump_instance(const Instance& instance);

Instance read_instance(const std::filesystem::path& path);
void write_instance(const Instance& instance, const std::filesystem::path& path);

nlohmann::ordered_json leader_to_json(const LeaderDecision& leader);
nlohmann::ordered_json plan_to_json(const PDSpec& pd, const FollowerSolution& plan);

}  // namespace prodtrans
