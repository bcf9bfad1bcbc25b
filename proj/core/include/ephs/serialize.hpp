#pragma once

#include <string>

#include <json.hpp>  // vendored nlohmann/json

#include "ephs/components.hpp"
#include "ephs/pattern.hpp"

namespace ephs::core {

nlohmann::json pattern_to_json(const Pattern& p);
Pattern pattern_from_json(const nlohmann::json& j);

/// Deterministic serialization (sorted keys, 2-space indent, trailing newline).
std::string canonical_pattern_string(const Pattern& p);

nlohmann::json args_to_json(const std::map<std::string, components::ArgValue>& args);
std::map<std::string, components::ArgValue> args_from_json(const nlohmann::json& j);

nlohmann::json flat_model_to_json(const FlatModel& m);

}  // namespace ephs::core
