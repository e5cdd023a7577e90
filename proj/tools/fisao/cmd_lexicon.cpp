#include <iostream>
#include <memory>
#include <sstream>

#include "commands.hpp"
#include "common.hpp"
#include "fisao/entity_lexicon.hpp"
#include "fisao/error.hpp"

namespace fisao::cli {
namespace {

struct LexiconState {
  CommonFlags common;
  Schema schema;
  std::string labels;
  std::string synonyms;
  std::string irregulars;
  std::vector<std::string> lookup;
};

void run(LexiconState& st) {
  apply_config(st.common, st.schema);
  if (st.labels.empty()) throw InputError("lexicon: --labels is required");
  const OutputDir out(st.common.out, st.common.force);
  out.claim({"entity_set.tsv", "conflicts.tsv", "effective_config.json"});

  const auto base = read_label_file(st.labels);
  const SynonymTable synonyms = st.synonyms.empty() ? SynonymTable{} : read_synonym_table(st.synonyms);
  const IrregularPlurals irregulars =
      st.irregulars.empty() ? default_irregular_plurals() : read_irregular_plurals(st.irregulars);
  const auto set = EntitySet::build(base, synonyms, irregulars);

  std::ostringstream surfaces;
  for (const auto& [surface, canonical] : set.surface_map()) surfaces << surface << '\t' << canonical << '\n';
  out.write_text("entity_set.tsv", surfaces.str());
  std::ostringstream conflicts;
  for (const auto& c : set.conflicts()) conflicts << c.surface << '\t' << c.kept << '\t' << c.rejected << '\n';
  out.write_text("conflicts.tsv", conflicts.str());
  out.write_effective_config("lexicon", st.schema.dump());

  std::cout << "labels " << set.base_labels().size() << '\n'
            << "surfaces " << set.surface_map().size() << '\n'
            << "conflicts " << set.conflicts().size() << '\n';
  for (const auto& w : st.lookup) {
    const auto hit = set.find(w);
    std::cout << w << '\t' << (hit ? *hit : "-") << '\n';
  }
}

}  // namespace

void add_lexicon(CLI::App& root) {
  auto* app = root.add_subcommand("lexicon", "Build the entity set and look up surface forms");
  auto st = std::make_shared<LexiconState>();
  st->schema.field("labels", st->labels, "Label file, one canonical label per line");
  st->schema.field("synonyms", st->synonyms, "Tab-separated synonym table");
  st->schema.field("irregulars", st->irregulars, "Tab-separated irregular plurals (replaces the built-in table)");
  st->schema.bind(*app);
  app->add_option("lookup", st->lookup, "Tokens to resolve");
  add_common_flags(*app, st->common);
  app->callback([st] { run(*st); });
}

}  // namespace fisao::cli
