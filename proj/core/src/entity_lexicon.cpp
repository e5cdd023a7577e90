#include "fisao/entity_lexicon.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "fisao/error.hpp"
#include "fisao/log.hpp"

namespace fisao {
namespace {

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string inflect_word(std::string_view word, const IrregularPlurals& irregulars) {
  if (auto it = irregulars.find(std::string(word)); it != irregulars.end()) return it->second;
  if (word.empty()) return {};
  if (ends_with(word, "s") || ends_with(word, "x") || ends_with(word, "z") || ends_with(word, "ch") ||
      ends_with(word, "sh")) {
    return std::string(word) + "es";
  }
  if (word.size() >= 2 && word.back() == 'y' && !is_vowel(word[word.size() - 2])) {
    return std::string(word.substr(0, word.size() - 1)) + "ies";
  }
  return std::string(word) + "s";
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, '\t')) out.push_back(cell);
  return out;
}

bool skippable(const std::string& line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string::npos || line[first] == '#';
}

}  // namespace

const IrregularPlurals& default_irregular_plurals() {
  static const IrregularPlurals table{
      {"person", "people"}, {"man", "men"},     {"woman", "women"}, {"child", "children"},
      {"mouse", "mice"},    {"foot", "feet"},   {"tooth", "teeth"}, {"goose", "geese"},
      {"knife", "knives"},  {"leaf", "leaves"}, {"shelf", "shelves"}, {"sheep", "sheep"},
      {"fish", "fish"},     {"deer", "deer"},   {"ox", "oxen"}};
  return table;
}

std::string normalize_surface(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string pluralize(std::string_view label, const IrregularPlurals& irregulars) {
  const std::string norm = normalize_surface(label);
  const auto space = norm.rfind(' ');
  if (space == std::string::npos) return inflect_word(norm, irregulars);
  return norm.substr(0, space + 1) + inflect_word(std::string_view(norm).substr(space + 1), irregulars);
}

void EntitySet::add_surface(const std::string& surface, const std::string& canonical) {
  if (surface.empty()) return;
  auto [it, inserted] = surface_map_.emplace(surface, canonical);
  if (!inserted && it->second != canonical) {
    conflicts_.push_back({surface, it->second, canonical});
    log::warn("lexicon: surface '" + surface + "' already maps to '" + it->second + "', ignoring '" + canonical + "'");
  }
}

EntitySet EntitySet::build(std::span<const std::string> base_labels, const SynonymTable& synonyms,
                           const IrregularPlurals& irregulars) {
  EntitySet set;
  std::vector<std::string> ordered;
  for (const auto& raw : base_labels) {
    auto label = normalize_surface(raw);
    if (label.empty()) throw InputError("lexicon: base labels must be non-empty");
    if (set.base_labels_.insert(label).second) ordered.push_back(std::move(label));
  }
  for (const auto& row : synonyms) {
    if (!set.base_labels_.contains(normalize_surface(row.canonical))) {
      throw InputError("lexicon: synonym row references unknown canonical label '" + row.canonical + "'");
    }
  }
  for (const auto& label : ordered) set.add_surface(label, label);
  for (const auto& label : ordered) set.add_surface(pluralize(label, irregulars), label);
  for (const auto& row : synonyms) {
    const auto canonical = normalize_surface(row.canonical);
    for (const auto& syn : row.synonyms) set.add_surface(normalize_surface(syn), canonical);
  }
  return set;
}

std::optional<std::string> EntitySet::find(std::string_view token) const {
  auto it = surface_map_.find(normalize_surface(token));
  if (it == surface_map_.end()) return std::nullopt;
  return it->second;
}

std::vector<EntityMatch> match_spans(std::span<const std::string> tokens, const EntitySet& set) {
  std::vector<EntityMatch> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto norm = normalize_surface(tokens[i]);
    if (norm.empty() || norm.find(' ') != std::string::npos) continue;
    if (auto canonical = set.find(norm)) out.push_back({i, std::move(*canonical)});
  }
  return out;
}

std::vector<std::string> read_label_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open label file '" + path.string() + "'");
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (skippable(line)) continue;
    labels.push_back(normalize_surface(line));
  }
  return labels;
}

SynonymTable read_synonym_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open synonym table '" + path.string() + "'");
  SynonymTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (skippable(line)) continue;
    auto cells = split_tabs(line);
    SynonymRow row{normalize_surface(cells.front()), {}};
    for (std::size_t i = 1; i < cells.size(); ++i) {
      auto syn = normalize_surface(cells[i]);
      if (!syn.empty()) row.synonyms.push_back(std::move(syn));
    }
    table.push_back(std::move(row));
  }
  return table;
}

IrregularPlurals read_irregular_plurals(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open irregular plural table '" + path.string() + "'");
  IrregularPlurals table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    auto cells = split_tabs(line);
    if (cells.size() != 2) {
      throw InputError(path.string() + ": line " + std::to_string(line_no) + ": expected 'singular<TAB>plural'");
    }
    table[normalize_surface(cells[0])] = normalize_surface(cells[1]);
  }
  return table;
}

}  // namespace fisao
