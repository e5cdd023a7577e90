#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fisao/reward_core.hpp"
#include "schema.hpp"

namespace fisao::cli {

/// Flags shared by every subcommand but kept out of the config file.
struct CommonFlags {
  std::string out;
  std::string config;
  bool force = false;
};

void add_common_flags(CLI::App& app, CommonFlags& flags);

/// Reads the --config file (if any) into the schema.
void apply_config(const CommonFlags& flags, Schema& schema);

/// The directory every output of one run goes to: --out, else
/// $FISAO_OUTPUT_DIR, else ./fisao_out.
class OutputDir {
 public:
  OutputDir(const std::string& out_flag, bool force);

  const std::filesystem::path& dir() const noexcept { return dir_; }
  OutputDir sub(const std::string& name) const;

  /// Throws InputError if any of `names` exists and --force was not given.
  void claim(std::initializer_list<std::string_view> names) const;
  std::filesystem::path file(std::string_view name) const;

  void write_text(std::string_view name, const std::string& text) const;
  void write_json(std::string_view name, const nlohmann::json& j) const;
  /// effective_config.json: the command and every resolved setting.
  void write_effective_config(std::string_view command, const nlohmann::json& settings) const;

 private:
  OutputDir(std::filesystem::path dir, bool force, int);
  std::filesystem::path dir_;
  bool force_;
};

/// Reward settings as they appear on the command line.
struct RewardFlags {
  double margin = RewardConfig{}.margin;
  double kl_scale = RewardConfig{}.kl_scale;
  std::string hal_denominator = "as_intended";

  void declare(Schema& schema);
  RewardConfig resolve() const;
};

/// Splits on whitespace.
std::vector<std::string> split_words(const std::string& text);

}  // namespace fisao::cli
