#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <type_traits>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fisao/error.hpp"

namespace fisao::cli {

/// Each setting is declared once and then exposed as a command-line flag,
/// a key of the JSON config file, and an entry of the effective-config dump.
/// Flags given on the command line take precedence over the config file.
class Schema {
 public:
  template <typename T>
  void field(const std::string& key, T& ref, const std::string& help) {
    Field f;
    f.key = key;
    f.help = help;
    f.bind = [&ref, key, help](CLI::App& app) {
      if constexpr (std::is_same_v<T, bool>) {
        return app.add_flag("--" + flag_name(key), ref, help);
      } else {
        return app.add_option("--" + flag_name(key), ref, help)->capture_default_str();
      }
    };
    f.merge = [&ref, key](const nlohmann::json& v) {
      try {
        ref = v.get<T>();
      } catch (const nlohmann::json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
      }
    };
    f.dump = [&ref] { return nlohmann::json(ref); };
    fields_.push_back(std::move(f));
  }

  void bind(CLI::App& app) {
    for (auto& f : fields_) f.option = f.bind(app);
  }

  /// Fills every setting not given as a flag from `config`; unknown keys are errors.
  void merge(const nlohmann::json& config) {
    if (!config.is_object()) throw ConfigError("config file must hold a JSON object");
    for (const auto& [key, value] : config.items()) {
      auto it = std::find_if(fields_.begin(), fields_.end(), [&](const Field& f) { return f.key == key; });
      if (it == fields_.end()) throw ConfigError("unknown config key '" + key + "'");
      if (it->option != nullptr && it->option->count() > 0) continue;
      it->merge(value);
    }
  }

  nlohmann::json dump() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& f : fields_) j[f.key] = f.dump();
    return j;
  }

 private:
  static std::string flag_name(std::string key) {
    for (char& c : key) {
      if (c == '_') c = '-';
    }
    return key;
  }

  struct Field {
    std::string key;
    std::string help;
    std::function<CLI::Option*(CLI::App&)> bind;
    std::function<void(const nlohmann::json&)> merge;
    std::function<nlohmann::json()> dump;
    CLI::Option* option = nullptr;
  };
  std::vector<Field> fields_;
};

}  // namespace fisao::cli
