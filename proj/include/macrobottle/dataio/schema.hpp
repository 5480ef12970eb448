#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "macrobottle/errors.hpp"

namespace macrobottle::dataio {

// Validator for the draft-07 keywords the report schema uses: $ref into
// #/definitions, type, const, enum, minimum, required, properties,
// additionalProperties, items and oneOf. Any other constraint keyword is
// rejected rather than silently ignored.
class SchemaValidator {
 public:
  explicit SchemaValidator(nlohmann::json schema) : root_(std::move(schema)) {}

  static SchemaValidator from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path.string() + ": cannot open schema");
    return SchemaValidator(nlohmann::json::parse(in));
  }

  // Empty when valid; otherwise one message per violation with a JSON pointer.
  [[nodiscard]] std::vector<std::string> validate(const nlohmann::json& doc) const {
    std::vector<std::string> errors;
    check(root_, doc, "", errors);
    return errors;
  }

 private:
  nlohmann::json root_;

  const nlohmann::json& resolve(const nlohmann::json& s) const {
    const std::string ref = s.at("$ref").get<std::string>();
    const std::string prefix = "#/definitions/";
    if (ref.rfind(prefix, 0) != 0) throw std::invalid_argument("schema: unsupported $ref " + ref);
    return root_.at("definitions").at(ref.substr(prefix.size()));
  }

  static bool has_type(const nlohmann::json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    if (t == "integer") {
      return v.is_number_integer() || (v.is_number_float() && v.get<double>() == std::floor(v.get<double>()));
    }
    if (t == "number") return v.is_number();
    throw std::invalid_argument("schema: unknown type " + t);
  }

  void check(const nlohmann::json& s, const nlohmann::json& v, const std::string& at,
             std::vector<std::string>& errors) const {
    static const std::set<std::string> known = {"$schema", "$id", "title", "description", "definitions", "$ref",
                                                "type", "const", "enum", "minimum", "required", "properties",
                                                "additionalProperties", "items", "oneOf"};
    for (const auto& [key, _] : s.items()) {
      if (!known.contains(key)) throw std::invalid_argument("schema: unsupported keyword " + key);
    }
    const std::string where = at.empty() ? "/" : at;
    if (s.contains("$ref")) {
      check(resolve(s), v, at, errors);
      return;
    }
    if (s.contains("type")) {
      const auto& t = s.at("type");
      bool ok = false;
      if (t.is_array()) {
        for (const auto& e : t) ok = ok || has_type(v, e.get<std::string>());
      } else {
        ok = has_type(v, t.get<std::string>());
      }
      if (!ok) {
        errors.push_back(where + ": expected type " + t.dump() + ", found " + v.type_name());
        return;
      }
    }
    if (s.contains("const") && v != s.at("const")) errors.push_back(where + ": expected " + s.at("const").dump());
    if (s.contains("enum")) {
      bool found = false;
      for (const auto& e : s.at("enum")) found = found || e == v;
      if (!found) errors.push_back(where + ": " + v.dump() + " is not one of " + s.at("enum").dump());
    }
    if (s.contains("minimum") && v.is_number() && v.get<double>() < s.at("minimum").get<double>()) {
      errors.push_back(where + ": below minimum " + s.at("minimum").dump());
    }
    if (s.contains("oneOf")) {
      int matches = 0;
      for (const auto& alt : s.at("oneOf")) {
        std::vector<std::string> sub;
        check(alt, v, at, sub);
        if (sub.empty()) ++matches;
      }
      if (matches != 1) errors.push_back(where + ": matches " + std::to_string(matches) + " oneOf alternatives");
    }
    if (v.is_object()) {
      if (s.contains("required")) {
        for (const auto& r : s.at("required")) {
          if (!v.contains(r.get<std::string>())) errors.push_back(where + ": missing " + r.get<std::string>());
        }
      }
      const nlohmann::json props = s.value("properties", nlohmann::json::object());
      for (const auto& [key, value] : v.items()) {
        const std::string child = at + "/" + key;
        if (props.contains(key)) {
          check(props.at(key), value, child, errors);
        } else if (s.contains("additionalProperties")) {
          const auto& ap = s.at("additionalProperties");
          if (ap.is_boolean()) {
            if (!ap.get<bool>()) errors.push_back(child + ": unexpected property");
          } else {
            check(ap, value, child, errors);
          }
        }
      }
    }
    if (v.is_array() && s.contains("items")) {
      for (std::size_t i = 0; i < v.size(); ++i) check(s.at("items"), v[i], at + "/" + std::to_string(i), errors);
    }
  }
};

}  // namespace macrobottle::dataio
