#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace nestor {

struct SchemaViolation {
  /// JSON pointer into the instance, "" for the root.
  std::string path;
  std::string message;
};

/// Validator for the draft-07 keywords used by the shipped run-config schema:
/// type, enum, required, properties, additionalProperties, items, minItems,
/// maxItems, minLength, minimum, maximum, exclusiveMinimum, exclusiveMaximum
/// and local "$ref": "#/definitions/...". Other keywords are ignored.
class JsonSchema {
 public:
  explicit JsonSchema(nlohmann::json schema);

  std::vector<SchemaViolation> validate(const nlohmann::json& instance) const;

 private:
  void check(const nlohmann::json& node, const nlohmann::json& inst, const std::string& path,
             std::vector<SchemaViolation>& out) const;
  const nlohmann::json& resolve(const nlohmann::json& node) const;

  nlohmann::json schema_;
};

/// "~" and "/" escaped per RFC 6901.
std::string json_pointer_token(const std::string& key);

}  // namespace nestor
