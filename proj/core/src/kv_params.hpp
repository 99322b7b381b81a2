#pragma once

// Shared helper for "name:key=value,key=value" descriptor strings.

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace levelset::detail {

struct SpecString {
  std::string name;
  std::map<std::string, std::string> params;
};

inline SpecString parse_spec_string(std::string_view text,
                                    const std::string& what) {
  SpecString out;
  const auto colon = text.find(':');
  out.name = std::string(text.substr(0, colon));
  if (out.name.empty()) {
    throw std::invalid_argument(what + ": empty name in '" +
                                std::string(text) + "'");
  }
  if (colon == std::string_view::npos) return out;

  std::string_view rest = text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    std::string_view item = rest.substr(0, comma);
    rest = (comma == std::string_view::npos) ? std::string_view{}
                                             : rest.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0 || eq + 1 == item.size()) {
      throw std::invalid_argument(what + ": expected key=value, got '" +
                                  std::string(item) + "'");
    }
    const std::string key(item.substr(0, eq));
    const std::string value(item.substr(eq + 1));
    if (!out.params.emplace(key, value).second) {
      throw std::invalid_argument(what + ": duplicate key '" + key + "'");
    }
  }
  return out;
}

inline double parse_double(const std::string& value, const std::string& what,
                           const std::string& key) {
  std::size_t used = 0;
  double parsed = 0.0;
  try {
    parsed = std::stod(value, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != value.size()) {
    throw std::invalid_argument(what + ": bad numeric value '" + value +
                                "' for key '" + key + "'");
  }
  return parsed;
}

inline double take_number(SpecString& spec, const std::string& key,
                          double fallback, const std::string& what) {
  const auto it = spec.params.find(key);
  if (it == spec.params.end()) return fallback;
  const double value = parse_double(it->second, what, key);
  spec.params.erase(it);
  return value;
}

inline std::string take_string(SpecString& spec, const std::string& key,
                               const std::string& fallback) {
  const auto it = spec.params.find(key);
  if (it == spec.params.end()) return fallback;
  std::string value = it->second;
  spec.params.erase(it);
  return value;
}

inline void reject_leftovers(const SpecString& spec, const std::string& what) {
  if (!spec.params.empty()) {
    throw std::invalid_argument(what + ": unknown key '" +
                                spec.params.begin()->first + "' for '" +
                                spec.name + "'");
  }
}

}  // namespace levelset::detail
