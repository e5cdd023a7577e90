#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fisao {

struct SynonymRow {
  std::string canonical;
  std::vector<std::string> synonyms;
};
using SynonymTable = std::vector<SynonymRow>;

/// singular -> plural overrides for the rule-based pluralizer.
using IrregularPlurals = std::map<std::string, std::string>;

/// A small built-in table (person -> people, mouse -> mice, ...).
const IrregularPlurals& default_irregular_plurals();

/// Lowercase (ASCII), trim, and collapse internal whitespace runs to one space.
std::string normalize_surface(std::string_view text);

/// Rule-based plural of a normalized label. Multi-word labels inflect the last word.
std::string pluralize(std::string_view label, const IrregularPlurals& irregulars = default_irregular_plurals());

/// A surface form claimed by two canonical labels; the first writer is kept.
struct LexiconConflict {
  std::string surface;
  std::string kept;
  std::string rejected;
};

/// The entity set C: canonical labels plus every surface form mapping onto them.
/// Immutable after build.
class EntitySet {
 public:
  EntitySet() = default;

  /// Insertion order is: base labels, their plurals, then synonym rows in file
  /// order. Conflicts keep the first mapping and are reported through log::warn.
  /// Throws InputError for a synonym row whose canonical label is not a base label.
  static EntitySet build(std::span<const std::string> base_labels, const SynonymTable& synonyms,
                         const IrregularPlurals& irregulars = default_irregular_plurals());

  /// Canonical label for `token` after normalization, if it is a known surface.
  std::optional<std::string> find(std::string_view token) const;

  const std::set<std::string>& base_labels() const noexcept { return base_labels_; }
  const std::map<std::string, std::string>& surface_map() const noexcept { return surface_map_; }
  const std::vector<LexiconConflict>& conflicts() const noexcept { return conflicts_; }
  bool empty() const noexcept { return base_labels_.empty(); }

 private:
  void add_surface(const std::string& surface, const std::string& canonical);

  std::set<std::string> base_labels_;
  std::map<std::string, std::string> surface_map_;
  std::vector<LexiconConflict> conflicts_;
};

inline std::optional<std::string> contains(const EntitySet& set, std::string_view token) { return set.find(token); }

struct EntityMatch {
  std::size_t position;
  std::string canonical;

  friend bool operator==(const EntityMatch&, const EntityMatch&) = default;
};

/// Single-token matches only; multi-word surfaces never match here.
std::vector<EntityMatch> match_spans(std::span<const std::string> tokens, const EntitySet& set);

/// One label per line; blank lines and lines starting with '#' are skipped.
std::vector<std::string> read_label_file(const std::filesystem::path& path);
/// Tab-separated: canonical, then synonyms.
SynonymTable read_synonym_table(const std::filesystem::path& path);
/// Tab-separated: singular, plural.
IrregularPlurals read_irregular_plurals(const std::filesystem::path& path);

}  // namespace fisao
