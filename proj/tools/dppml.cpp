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


// dppml: synthesize data, analyze pair graphs, train private metrics and run
// utility sweeps. See `dppml --help` and `dppml <command> --help`.

#include <algorithm>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dppml/commands.hpp"

namespace {

std::string FlagName(std::string name) {
  std::replace(name.begin(), name.end(), '_', '-');
  return "--" + name;
}

std::string DefaultText(const dppml::ParamSpec& spec) {
  if (spec.default_value.is_null()) return "";
  if (spec.default_value.is_string()) return spec.default_value.get<std::string>();
  if (spec.default_value.is_array()) {
    std::string text;
    for (const auto& item : spec.default_value) {
      if (!text.empty()) text += ',';
      text += item.is_string() ? item.get<std::string>() : item.dump();
    }
    return text;
  }
  return spec.default_value.dump();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pairwise-private distance metric learning"};
  app.require_subcommand(1);

  std::optional<std::string> seed;
  std::optional<std::string> config;
  std::optional<std::string> out_dir;
  app.add_option("--seed", seed, "master seed (default 1)");
  app.add_option("--config", config, "JSON config; flags override its values");
  app.add_option("--out-dir", out_dir, "directory for outputs (default .)");

  // Raw flag strings per command, keyed by parameter name.
  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, CLI::App*> subcommands;
  for (const std::string& command : dppml::cli::CommandNames()) {
    CLI::App* sub = app.add_subcommand(command);
    sub->fallthrough();
    subcommands[command] = sub;
    for (const dppml::ParamSpec& spec : dppml::cli::CommandParams(command)) {
      std::string help = spec.help;
      const std::string def = DefaultText(spec);
      if (!def.empty()) help += " [" + def + "]";
      if (spec.required) help += " (required)";
      sub->add_option(FlagName(spec.name), values[command][spec.name], help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? dppml::cli::kExitOk : dppml::cli::kExitUsage;
  }

  for (const auto& [command, sub] : subcommands) {
    if (!sub->parsed()) continue;
    std::map<std::string, std::string> given;
    for (const dppml::ParamSpec& spec : dppml::cli::CommandParams(command)) {
      if (sub->count(FlagName(spec.name)) > 0) {
        given[spec.name] = values[command][spec.name];
      }
    }
    return dppml::cli::RunCommand(command, config, given, seed, out_dir, std::cout,
                                  std::cerr);
  }
  return dppml::cli::kExitUsage;
}
