//
// Copyright 2026 The dppml Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Flat parameter tables for the command-line tool. Values resolve in the
// order defaults < JSON config < command-line flags, and the fully resolved
// table is what gets written back as the run's config file.

#ifndef DPPML_CONFIG_HPP_
#define DPPML_CONFIG_HPP_

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dppml/common.hpp"
#include "dppml/dataio.hpp"
#include "json.hpp"

namespace dppml {

using Json = nlohmann::ordered_json;

enum class ParamType { kInt, kNumber, kBool, kString, kNumberList, kStringList };

struct ParamSpec {
  std::string name;
  ParamType type;
  Json default_value;  // null: unset unless given
  std::string help;
  bool required = false;
  bool input_path = false;  // recorded as an absolute path once resolved
};

namespace internal {

[[noreturn]] inline void ThrowConfig(const std::string& name,
                                     const std::string& what) {
  throw Error(ErrorCode::kConfigInvalid, "parameter '" + name + "': " + what);
}

// Numbers; "inf" and "infinity" denote +infinity.
inline double ToNumber(const std::string& name, const Json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "infinity" || s == "Infinity") {
      return std::numeric_limits<double>::infinity();
    }
    if (auto d = ParseDouble(s)) return *d;
  }
  ThrowConfig(name, "expected a number, got " + v.dump());
}

inline std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  for (std::string& item : SplitLine(text, ',')) {
    if (!item.empty()) out.push_back(std::move(item));
  }
  return out;
}

inline Json NumberToJson(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

// Canonical JSON for a value of the given type; strings from the command
// line are parsed here.
inline Json Coerce(const ParamSpec& spec, const Json& v) {
  if (v.is_null()) return v;
  switch (spec.type) {
    case ParamType::kInt: {
      if (v.is_number_integer()) return v.get<int64_t>();
      const double d = ToNumber(spec.name, v);
      if (d != std::floor(d) || std::isinf(d)) ThrowConfig(spec.name, "expected an integer");
      return static_cast<int64_t>(d);
    }
    case ParamType::kNumber:
      return NumberToJson(ToNumber(spec.name, v));
    case ParamType::kBool: {
      if (v.is_boolean()) return v;
      if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "true" || s == "1" || s == "yes") return true;
        if (s == "false" || s == "0" || s == "no") return false;
      }
      ThrowConfig(spec.name, "expected a boolean, got " + v.dump());
    }
    case ParamType::kString:
      if (v.is_string()) return v;
      ThrowConfig(spec.name, "expected a string, got " + v.dump());
    case ParamType::kNumberList: {
      Json out = Json::array();
      if (v.is_array()) {
        for (const Json& item : v) out.push_back(NumberToJson(ToNumber(spec.name, item)));
      } else if (v.is_string()) {
        for (const std::string& item : SplitList(v.get<std::string>())) {
          out.push_back(NumberToJson(ToNumber(spec.name, item)));
        }
      } else {
        out.push_back(NumberToJson(ToNumber(spec.name, v)));
      }
      return out;
    }
    case ParamType::kStringList: {
      Json out = Json::array();
      if (v.is_array()) {
        for (const Json& item : v) {
          if (!item.is_string()) ThrowConfig(spec.name, "expected strings");
          out.push_back(item);
        }
      } else if (v.is_string()) {
        for (const std::string& item : SplitList(v.get<std::string>())) out.push_back(item);
      } else {
        ThrowConfig(spec.name, "expected a list of strings");
      }
      return out;
    }
  }
  return v;
}

}  // namespace internal

inline Json LoadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigInvalid, "cannot open config " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kConfigInvalid, path + ": " + e.what());
  }
}

// Resolves every spec. `config` may hold keys of other commands and the
// keys "command", "seed" and "out_dir", which are ignored here; any other
// unknown key is rejected. `cli` holds raw flag strings keyed by name.
inline Json ResolveParams(const std::vector<ParamSpec>& specs, const Json& config,
                          const std::map<std::string, std::string>& cli) {
  if (!config.is_null() && !config.is_object()) {
    throw Error(ErrorCode::kConfigInvalid, "config must be a JSON object");
  }
  std::map<std::string, const ParamSpec*> by_name;
  for (const ParamSpec& spec : specs) by_name[spec.name] = &spec;
  if (config.is_object()) {
    for (const auto& [key, value] : config.items()) {
      if (key == "command" || key == "seed" || key == "out_dir") continue;
      if (!by_name.contains(key)) {
        throw Error(ErrorCode::kConfigInvalid, "unknown config key '" + key + "'");
      }
    }
  }
  Json resolved = Json::object();
  for (const ParamSpec& spec : specs) {
    Json value = spec.default_value;
    if (config.is_object() && config.contains(spec.name)) value = config[spec.name];
    if (auto it = cli.find(spec.name); it != cli.end()) value = it->second;
    value = internal::Coerce(spec, value);
    if (spec.required && value.is_null()) {
      internal::ThrowConfig(spec.name, "required but not given");
    }
    resolved[spec.name] = value;
  }
  return resolved;
}

// Typed accessors over a resolved table.
class Params {
 public:
  explicit Params(Json table) : table_(std::move(table)) {}

  const Json& json() const { return table_; }
  bool has(const std::string& name) const {
    return table_.contains(name) && !table_[name].is_null();
  }

  int64_t Int(const std::string& name) const { return Get(name).get<int64_t>(); }
  double Number(const std::string& name) const {
    return internal::ToNumber(name, Get(name));
  }
  bool Bool(const std::string& name) const { return Get(name).get<bool>(); }
  std::string String(const std::string& name) const {
    return Get(name).get<std::string>();
  }
  std::optional<double> OptionalNumber(const std::string& name) const {
    if (!has(name)) return std::nullopt;
    return Number(name);
  }
  std::optional<int64_t> OptionalInt(const std::string& name) const {
    if (!has(name)) return std::nullopt;
    return Int(name);
  }
  std::optional<std::string> OptionalString(const std::string& name) const {
    if (!has(name)) return std::nullopt;
    return String(name);
  }
  std::vector<double> NumberList(const std::string& name) const {
    std::vector<double> out;
    for (const Json& v : Get(name)) out.push_back(internal::ToNumber(name, v));
    return out;
  }
  std::vector<std::string> StringList(const std::string& name) const {
    return Get(name).get<std::vector<std::string>>();
  }

 private:
  const Json& Get(const std::string& name) const {
    if (!table_.contains(name)) {
      throw Error(ErrorCode::kConfigInvalid, "missing parameter '" + name + "'");
    }
    return table_[name];
  }

  Json table_;
};

}  // namespace dppml

#endif  // DPPML_CONFIG_HPP_
