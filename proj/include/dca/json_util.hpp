#pragma once

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dca/error.hpp"

namespace dca {

using json = nlohmann::json;

namespace detail {

inline std::string child_path(const std::string& path, std::string_view key) {
  return path + "/" + std::string(key);
}

inline std::string child_path(const std::string& path, std::size_t index) {
  return path + "/" + std::to_string(index);
}

/// Translates a byte offset into (line, column), both 1-based.
inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(offset, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline json parse_json_text(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError("invalid JSON: " + std::string(e.what()), line, col);
  }
}

/// Path-tracking view over a JSON object used by the schema readers.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw SchemaError(path_.empty() ? "/" : path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string path(std::string_view key) const { return child_path(path_, key); }

  void allow_only(std::initializer_list<std::string_view> keys) const {
    for (const auto& [k, v] : j_.items()) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end())
        throw SchemaError(path(k), "unknown field");
    }
  }

  bool has(std::string_view key) const {
    auto it = j_.find(std::string(key));
    return it != j_.end() && !it->is_null();
  }

  const json& at(std::string_view key) const {
    auto it = j_.find(std::string(key));
    if (it == j_.end() || it->is_null()) throw SchemaError(path(key), "missing required field");
    return *it;
  }

  std::string string(std::string_view key) const {
    const auto& v = at(key);
    if (!v.is_string()) throw SchemaError(path(key), "expected a string");
    return v.get<std::string>();
  }

  std::string string_or(std::string_view key, std::string fallback) const {
    return has(key) ? string(key) : std::move(fallback);
  }

  std::optional<std::string> optional_string(std::string_view key) const {
    if (!has(key)) return std::nullopt;
    return string(key);
  }

  double number(std::string_view key) const {
    const auto& v = at(key);
    if (!v.is_number()) throw SchemaError(path(key), "expected a number");
    return v.get<double>();
  }

  std::optional<double> optional_number(std::string_view key) const {
    if (!has(key)) return std::nullopt;
    return number(key);
  }

  std::int64_t integer(std::string_view key) const {
    const auto& v = at(key);
    if (!v.is_number_integer()) throw SchemaError(path(key), "expected an integer");
    return v.get<std::int64_t>();
  }

  bool boolean(std::string_view key) const {
    const auto& v = at(key);
    if (!v.is_boolean()) throw SchemaError(path(key), "expected a boolean");
    return v.get<bool>();
  }

  std::vector<std::string> string_list(std::string_view key) const {
    const auto& v = at(key);
    if (!v.is_array()) throw SchemaError(path(key), "expected an array");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) throw SchemaError(child_path(path(key), i), "expected a string");
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }

  std::vector<std::string> string_list_or_empty(std::string_view key) const {
    return has(key) ? string_list(key) : std::vector<std::string>{};
  }

  ObjectReader object(std::string_view key) const { return ObjectReader(at(key), path(key)); }

 private:
  const json& j_;
  std::string path_;
};

template <typename Enum, std::size_t N>
Enum enum_from_string(const std::array<std::string_view, N>& names, const std::string& s,
                      const std::string& path) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == s) return static_cast<Enum>(i);
  std::string allowed;
  for (auto n : names) allowed += (allowed.empty() ? "" : ", ") + std::string(n);
  throw SchemaError(path, "unknown value '" + s + "' (expected one of: " + allowed + ")");
}

}  // namespace detail
}  // namespace dca
