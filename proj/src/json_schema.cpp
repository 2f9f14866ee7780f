#include "nestor/json_schema.hpp"

#include <cmath>

#include "nestor/error.hpp"

namespace nestor {

namespace {

bool has_type(const nlohmann::json& inst, const std::string& type) {
  if (type == "object") return inst.is_object();
  if (type == "array") return inst.is_array();
  if (type == "string") return inst.is_string();
  if (type == "boolean") return inst.is_boolean();
  if (type == "null") return inst.is_null();
  if (type == "number") return inst.is_number();
  if (type == "integer") {
    if (inst.is_number_integer()) return true;
    if (!inst.is_number_float()) return false;
    const double v = inst.get<double>();
    return std::isfinite(v) && v == std::floor(v);
  }
  return false;
}

std::string describe(const nlohmann::json& v) { return v.dump(); }

}  // namespace

std::string json_pointer_token(const std::string& key) {
  std::string out;
  for (const char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

JsonSchema::JsonSchema(nlohmann::json schema) : schema_(std::move(schema)) {
  if (!schema_.is_object()) throw Error(ErrorKind::Config, "schema must be a JSON object");
}

std::vector<SchemaViolation> JsonSchema::validate(const nlohmann::json& instance) const {
  std::vector<SchemaViolation> out;
  check(schema_, instance, "", out);
  return out;
}

const nlohmann::json& JsonSchema::resolve(const nlohmann::json& node) const {
  const auto ref = node.find("$ref");
  if (ref == node.end()) return node;
  const std::string target = ref->get<std::string>();
  const std::string prefix = "#/definitions/";
  if (target.rfind(prefix, 0) != 0) throw Error(ErrorKind::Config, "unsupported $ref '" + target + "'");
  const auto defs = schema_.find("definitions");
  if (defs == schema_.end() || !defs->contains(target.substr(prefix.size()))) {
    throw Error(ErrorKind::Config, "unresolved $ref '" + target + "'");
  }
  return resolve(defs->at(target.substr(prefix.size())));
}

void JsonSchema::check(const nlohmann::json& raw, const nlohmann::json& inst, const std::string& path,
                       std::vector<SchemaViolation>& out) const {
  const nlohmann::json& node = resolve(raw);
  const std::string where = path.empty() ? "/" : path;

  if (const auto t = node.find("type"); t != node.end()) {
    bool ok = false;
    if (t->is_string()) {
      ok = has_type(inst, t->get<std::string>());
    } else {
      for (const auto& alt : *t) ok = ok || has_type(inst, alt.get<std::string>());
    }
    if (!ok) {
      out.push_back({path, "expected type " + describe(*t) + ", got " + describe(inst)});
      return;
    }
  }
  if (const auto e = node.find("enum"); e != node.end()) {
    bool found = false;
    for (const auto& v : *e) found = found || v == inst;
    if (!found) out.push_back({path, describe(inst) + " is not one of " + describe(*e)});
  }
  if (inst.is_number()) {
    const double v = inst.get<double>();
    if (const auto k = node.find("minimum"); k != node.end() && v < k->get<double>()) {
      out.push_back({path, describe(inst) + " is below the minimum " + describe(*k)});
    }
    if (const auto k = node.find("maximum"); k != node.end() && v > k->get<double>()) {
      out.push_back({path, describe(inst) + " is above the maximum " + describe(*k)});
    }
    if (const auto k = node.find("exclusiveMinimum"); k != node.end() && !(v > k->get<double>())) {
      out.push_back({path, describe(inst) + " must be greater than " + describe(*k)});
    }
    if (const auto k = node.find("exclusiveMaximum"); k != node.end() && !(v < k->get<double>())) {
      out.push_back({path, describe(inst) + " must be less than " + describe(*k)});
    }
  }
  if (inst.is_string()) {
    if (const auto k = node.find("minLength"); k != node.end() && inst.get<std::string>().size() < k->get<std::size_t>()) {
      out.push_back({path, "string shorter than " + describe(*k)});
    }
  }
  if (inst.is_array()) {
    if (const auto k = node.find("minItems"); k != node.end() && inst.size() < k->get<std::size_t>()) {
      out.push_back({path, "expected at least " + describe(*k) + " items"});
    }
    if (const auto k = node.find("maxItems"); k != node.end() && inst.size() > k->get<std::size_t>()) {
      out.push_back({path, "expected at most " + describe(*k) + " items"});
    }
    if (const auto items = node.find("items"); items != node.end()) {
      for (std::size_t i = 0; i < inst.size(); ++i) check(*items, inst[i], path + "/" + std::to_string(i), out);
    }
  }
  if (inst.is_object()) {
    if (const auto req = node.find("required"); req != node.end()) {
      for (const auto& name : *req) {
        if (!inst.contains(name.get<std::string>())) {
          out.push_back({path, "missing required property " + describe(name) + " at " + where});
        }
      }
    }
    const auto props = node.find("properties");
    const auto extra = node.find("additionalProperties");
    for (const auto& [key, value] : inst.items()) {
      const std::string child = path + "/" + json_pointer_token(key);
      if (props != node.end() && props->contains(key)) {
        check(props->at(key), value, child, out);
      } else if (extra != node.end()) {
        if (extra->is_boolean()) {
          if (!extra->get<bool>()) out.push_back({child, "unknown property \"" + key + "\""});
        } else {
          check(*extra, value, child, out);
        }
      }
    }
  }
}

}  // namespace nestor
