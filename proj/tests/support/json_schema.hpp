#pragma once

// Small JSON-Schema (draft-07) validator covering the keywords used by the
// shipped schemas: type, enum, const, properties, required,
// additionalProperties, items, minItems, maxItems, minimum, maximum, anyOf.

#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace schema {

using nlohmann::json;

namespace detail {

inline bool has_type(const json& v, const std::string& t) {
  if (t == "null") return v.is_null();
  if (t == "boolean") return v.is_boolean();
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "number") return v.is_number();
  if (t == "integer") {
    if (v.is_number_integer()) return true;
    if (v.is_number_float()) {
      const double d = v.get<double>();
      return std::isfinite(d) && d == std::floor(d);
    }
    return false;
  }
  return false;
}

inline void check(const json& s, const json& v, const std::string& path, std::vector<std::string>& errors) {
  if (s.is_boolean()) {
    if (!s.get<bool>()) errors.push_back(path + ": not allowed");
    return;
  }
  if (s.contains("type")) {
    bool ok = false;
    if (s["type"].is_string()) ok = has_type(v, s["type"].get<std::string>());
    else
      for (const auto& t : s["type"]) ok = ok || has_type(v, t.get<std::string>());
    if (!ok) {
      errors.push_back(path + ": wrong type (" + std::string(v.type_name()) + ")");
      return;
    }
  }
  if (s.contains("enum")) {
    bool ok = false;
    for (const auto& e : s["enum"]) ok = ok || e == v;
    if (!ok) errors.push_back(path + ": value not in enum");
  }
  if (s.contains("const") && s["const"] != v) errors.push_back(path + ": value differs from const");
  if (s.contains("anyOf")) {
    bool ok = false;
    for (const auto& alt : s["anyOf"]) {
      std::vector<std::string> sub;
      check(alt, v, path, sub);
      ok = ok || sub.empty();
    }
    if (!ok) errors.push_back(path + ": matches no alternative");
  }
  if (v.is_number()) {
    const double d = v.get<double>();
    if (s.contains("minimum") && d < s["minimum"].get<double>()) errors.push_back(path + ": below minimum");
    if (s.contains("maximum") && d > s["maximum"].get<double>()) errors.push_back(path + ": above maximum");
  }
  if (v.is_array()) {
    if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>()) errors.push_back(path + ": too few items");
    if (s.contains("maxItems") && v.size() > s["maxItems"].get<std::size_t>()) errors.push_back(path + ": too many items");
    if (s.contains("items"))
      for (std::size_t i = 0; i < v.size(); ++i) check(s["items"], v[i], path + "/" + std::to_string(i), errors);
  }
  if (v.is_object()) {
    if (s.contains("required"))
      for (const auto& r : s["required"])
        if (!v.contains(r.get<std::string>())) errors.push_back(path + ": missing '" + r.get<std::string>() + "'");
    for (auto it = v.begin(); it != v.end(); ++it) {
      const std::string sub = path + "/" + it.key();
      if (s.contains("properties") && s["properties"].contains(it.key()))
        check(s["properties"][it.key()], it.value(), sub, errors);
      else if (s.contains("additionalProperties"))
        check(s["additionalProperties"], it.value(), sub, errors);
    }
  }
}

}  // namespace detail

/// Empty when `value` conforms to `schema`.
inline std::vector<std::string> validate(const json& schema, const json& value) {
  std::vector<std::string> errors;
  detail::check(schema, value, "", errors);
  return errors;
}

}  // namespace schema
