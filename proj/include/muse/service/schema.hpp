#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace muse::service {

/// JSON Schema subset: type (name or list), enum, const, properties,
/// required, additionalProperties (bool or schema), items, minItems,
/// maxItems, minimum, maximum, minLength, anyOf, oneOf and local
/// "#/definitions/..." references. Returns one message per violation,
/// each prefixed with its JSON pointer; empty means valid.
std::vector<std::string> validate(const nlohmann::json& schema, const nlohmann::json& instance);

/// Every *.schema.json in `directory`, keyed by file name without the
/// ".schema.json" suffix.
std::map<std::string, nlohmann::json> load_schemas(const std::filesystem::path& directory);

}  // namespace muse::service
