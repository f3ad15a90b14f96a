#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "sot3d/errors.hpp"

namespace sot3d {

using json = nlohmann::json;

namespace jsonu {

inline json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline json parse_line(const std::string& line, const std::string& ctx) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw FormatError(ctx + ": " + e.what());
  }
}

inline void write_file(const std::filesystem::path& path, const json& j, int indent = 2) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(indent) << "\n";
  if (!out) throw FormatError("short write on " + path.string());
}

inline const json& field(const json& j, const char* key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(ctx + ": missing field '" + key + "'");
  return *it;
}

inline std::string get_string(const json& j, const char* key, const std::string& ctx) {
  const json& v = field(j, key, ctx);
  if (!v.is_string()) throw FormatError(ctx + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

inline bool get_bool(const json& j, const char* key, const std::string& ctx) {
  const json& v = field(j, key, ctx);
  if (!v.is_boolean()) throw FormatError(ctx + ": field '" + key + "' must be a boolean");
  return v.get<bool>();
}

inline double get_double(const json& j, const char* key, const std::string& ctx) {
  const json& v = field(j, key, ctx);
  if (!v.is_number()) throw FormatError(ctx + ": field '" + key + "' must be a number");
  return v.get<double>();
}

inline std::int64_t get_int(const json& j, const char* key, const std::string& ctx) {
  const json& v = field(j, key, ctx);
  if (!v.is_number_integer()) throw FormatError(ctx + ": field '" + key + "' must be an integer");
  return v.get<std::int64_t>();
}

inline const json& get_array(const json& j, const char* key, const std::string& ctx) {
  const json& v = field(j, key, ctx);
  if (!v.is_array()) throw FormatError(ctx + ": field '" + key + "' must be an array");
  return v;
}

inline const json& get_object(const json& j, const char* key, const std::string& ctx) {
  const json& v = field(j, key, ctx);
  if (!v.is_object()) throw FormatError(ctx + ": field '" + key + "' must be an object");
  return v;
}

}  // namespace jsonu
}  // namespace sot3d
