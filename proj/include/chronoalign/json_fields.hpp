// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "chronoalign/errors.hpp"

// Typed field access for config objects. Every failure names the full
// dotted path of the field.
namespace chronoalign::fields {

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline const nlohmann::json& require(const nlohmann::json& obj, const std::string& key,
                                     const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(join(path, key), "missing required field");
  return *it;
}

inline double as_number(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

inline std::string as_string(const nlohmann::json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

inline std::int64_t as_integer(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  return v.get<std::int64_t>();
}

inline double number(const nlohmann::json& obj, const std::string& key, const std::string& path) {
  return as_number(require(obj, key, path), join(path, key));
}

inline std::string string(const nlohmann::json& obj, const std::string& key,
                          const std::string& path) {
  return as_string(require(obj, key, path), join(path, key));
}

inline double number_or(const nlohmann::json& obj, const std::string& key,
                        const std::string& path, double fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return as_number(obj.at(key), join(path, key));
}

inline std::int64_t integer_or(const nlohmann::json& obj, const std::string& key,
                               const std::string& path, std::int64_t fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return as_integer(obj.at(key), join(path, key));
}

inline std::string string_or(const nlohmann::json& obj, const std::string& key,
                             const std::string& path, std::string fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return as_string(obj.at(key), join(path, key));
}

inline bool bool_or(const nlohmann::json& obj, const std::string& key, const std::string& path,
                    bool fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError(join(path, key), "expected true or false");
  return v.get<bool>();
}

}  // namespace chronoalign::fields
