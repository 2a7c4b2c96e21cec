// schema.hpp — just enough JSON Schema to validate our own report shapes.
#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace evobt {

// Supports: type, properties, required, items, enum, additionalProperties
// (boolean form). Returns human-readable violations, empty when valid.
std::vector<std::string> validate_schema(const nlohmann::json& instance,
                                         const nlohmann::json& schema,
                                         const std::string& where = "$");

nlohmann::json load_json_file(const std::string& path);

}  // namespace evobt
