#include "common.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fisao/error.hpp"

namespace fisao::cli {

void add_common_flags(CLI::App& app, CommonFlags& flags) {
  app.add_option("--out", flags.out, "Output directory (default: $FISAO_OUTPUT_DIR, else ./fisao_out)");
  app.add_option("--config", flags.config, "JSON config file; flags override its values");
  app.add_flag("--force", flags.force, "Overwrite existing outputs");
}

void apply_config(const CommonFlags& flags, Schema& schema) {
  if (flags.config.empty()) return;
  std::ifstream in(flags.config);
  if (!in) throw InputError("cannot open config '" + flags.config + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + flags.config + "' is not valid JSON: " + e.what());
  }
  schema.merge(j);
}

OutputDir::OutputDir(const std::string& out_flag, bool force) : force_(force) {
  if (!out_flag.empty()) {
    dir_ = out_flag;
  } else if (const char* env = std::getenv("FISAO_OUTPUT_DIR"); env != nullptr && *env != '\0') {
    dir_ = env;
  } else {
    dir_ = "fisao_out";
  }
}

OutputDir::OutputDir(std::filesystem::path dir, bool force, int) : dir_(std::move(dir)), force_(force) {}

OutputDir OutputDir::sub(const std::string& name) const { return OutputDir(dir_ / name, force_, 0); }

void OutputDir::claim(std::initializer_list<std::string_view> names) const {
  if (force_) return;
  for (auto name : names) {
    const auto p = dir_ / name;
    if (std::filesystem::exists(p)) {
      throw InputError("refusing to overwrite '" + p.string() + "' (pass --force)");
    }
  }
}

std::filesystem::path OutputDir::file(std::string_view name) const {
  claim({name});
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw InputError("cannot create output directory '" + dir_.string() + "': " + ec.message());
  return dir_ / name;
}

void OutputDir::write_text(std::string_view name, const std::string& text) const {
  const auto p = file(name);
  std::ofstream out(p);
  if (!out) throw InputError("cannot write '" + p.string() + "'");
  out << text;
}

void OutputDir::write_json(std::string_view name, const nlohmann::json& j) const { write_text(name, j.dump(2) + "\n"); }

void OutputDir::write_effective_config(std::string_view command, const nlohmann::json& settings) const {
  write_json("effective_config.json", {{"command", command}, {"settings", settings}});
}

void RewardFlags::declare(Schema& schema) {
  schema.field("margin", margin, "Dead-zone margin around the baselines");
  schema.field("kl_scale", kl_scale, "Weight of the KL penalty");
  schema.field("hal_denominator", hal_denominator, "Negative-branch denominator: as_intended or as_printed");
}

RewardConfig RewardFlags::resolve() const {
  RewardConfig cfg{margin, kl_scale, parse_hal_denominator(hal_denominator)};
  cfg.validate();
  return cfg;
}

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

}  // namespace fisao::cli
