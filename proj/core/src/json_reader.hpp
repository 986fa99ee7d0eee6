#pragma once

// JSON field access for the readers in this library; not installed.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "aos/error.hpp"
#include "aos/simulator.hpp"

namespace aos::detail {

using nlohmann::json;

// Field access that reports the file and a dotted field path on failure.
class Reader {
 public:
  explicit Reader(const std::filesystem::path& file) : file_(file.string()) {}

  json parse(const std::string& text) const {
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw FormatError(file_, "<document>", e.what());
    }
  }

  const json& member(const json& obj, const std::string& path, const char* key) const {
    if (!obj.is_object()) {
      throw FormatError(file_, path, "expected an object");
    }
    const auto it = obj.find(key);
    if (it == obj.end()) {
      throw FormatError(file_, join(path, key), "missing");
    }
    return *it;
  }

  const json* optional(const json& obj, const std::string& path, const char* key) const {
    if (!obj.is_object()) {
      throw FormatError(file_, path, "expected an object");
    }
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }

  double number(const json& v, const std::string& path) const {
    if (!v.is_number()) {
      throw FormatError(file_, path, "expected a number");
    }
    return v.get<double>();
  }

  int integer(const json& v, const std::string& path) const {
    if (!v.is_number_integer()) {
      throw FormatError(file_, path, "expected an integer");
    }
    return v.get<int>();
  }

  std::uint64_t unsigned_integer(const json& v, const std::string& path) const {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw FormatError(file_, path, "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::string string(const json& v, const std::string& path) const {
    if (!v.is_string()) {
      throw FormatError(file_, path, "expected a string");
    }
    return v.get<std::string>();
  }

  std::vector<double> numbers(const json& v, const std::string& path, std::size_t n) const {
    if (!v.is_array() || (n != 0 && v.size() != n)) {
      throw FormatError(file_, path,
                        n ? "expected an array of " + std::to_string(n) + " numbers"
                          : "expected an array");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

  double number_or(const json& obj, const std::string& path, const char* key, double def) const {
    const json* v = optional(obj, path, key);
    return v ? number(*v, join(path, key)) : def;
  }

  const json& array(const json& v, const std::string& path) const {
    if (!v.is_array()) {
      throw FormatError(file_, path, "expected an array");
    }
    return v;
  }

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    throw FormatError(file_, path, what);
  }

  static std::string join(const std::string& path, const char* key) {
    return path.empty() ? key : path + "." + key;
  }
  static std::string index(const std::string& path, std::size_t i) {
    return path + "[" + std::to_string(i) + "]";
  }

 private:
  std::string file_;
};

/// Scene spec from a JSON object located at field path `at`.
SceneSpec scene_spec_from(const Reader& r, const json& doc, const std::string& at);

}  // namespace aos::detail
