#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "emrs/harness/scenario.hpp"

namespace emrs::harness::detail {

using nlohmann::json;

[[noreturn]] inline void schema_error(const std::string& path, const std::string& message) {
  throw ConfigError(ConfigError::Kind::SchemaViolation, path, message);
}

/// Parses text, translating the byte offset of a syntax error into line and column.
inline json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    const std::string where = (source.empty() ? "" : source + ":") + "line " + std::to_string(line) + ", column " +
                              std::to_string(column);
    throw ConfigError(ConfigError::Kind::ParseError, where, e.what());
  }
}

/// Strict view of a JSON object: every key must be consumed, unknown keys are rejected.
class Fields {
 public:
  Fields(const json& value, std::string path) : value_(value), path_(std::move(path)) {
    if (!value_.is_object()) schema_error(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return value_.contains(key); }

  const json& raw(const std::string& key) {
    if (!value_.contains(key)) schema_error(child(key), "missing required field");
    seen_.insert(key);
    return value_.at(key);
  }

  const json* optional_raw(const std::string& key) {
    if (!value_.contains(key)) return nullptr;
    seen_.insert(key);
    return &value_.at(key);
  }

  double number(const std::string& key) { return as_number(raw(key), child(key)); }
  double number(const std::string& key, double fallback) {
    const json* v = optional_raw(key);
    return v ? as_number(*v, child(key)) : fallback;
  }

  double positive(const std::string& key, double fallback) {
    const double v = number(key, fallback);
    if (!(v > 0)) schema_error(child(key), "must be positive");
    return v;
  }

  double non_negative(const std::string& key, double fallback) {
    const double v = number(key, fallback);
    if (!(v >= 0)) schema_error(child(key), "must be non-negative");
    return v;
  }

  std::string string(const std::string& key) { return as_string(raw(key), child(key)); }
  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = optional_raw(key);
    return v ? as_string(*v, child(key)) : fallback;
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    const json* v = optional_raw(key);
    if (!v) return fallback;
    if (!v->is_number_unsigned()) schema_error(child(key), "expected a non-negative integer");
    return v->get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = optional_raw(key);
    if (!v) return fallback;
    if (!v->is_boolean()) schema_error(child(key), "expected true or false");
    return v->get<bool>();
  }

  std::vector<double> numbers(const std::string& key, std::optional<std::size_t> size = {}) {
    return as_numbers(raw(key), child(key), size);
  }

  /// Rejects keys that were never read.
  void finish() const {
    for (const auto& [key, _] : value_.items()) {
      if (!seen_.contains(key)) schema_error(child(key), "unknown field");
    }
  }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) schema_error(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) schema_error(path, "must be finite");
    return d;
  }

  static std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) schema_error(path, "expected a string");
    return v.get<std::string>();
  }

  static std::vector<double> as_numbers(const json& v, const std::string& path, std::optional<std::size_t> size) {
    if (!v.is_array()) schema_error(path, "expected an array of numbers");
    if (size && v.size() != *size) schema_error(path, "expected " + std::to_string(*size) + " elements");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }

 private:
  const json& value_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace emrs::harness::detail
