#include <doctest.h>

#include "fisao/entity_lexicon.hpp"
#include "fisao/error.hpp"
#include "fisao/log.hpp"
#include "test_support.hpp"

using namespace fisao;

namespace {

std::vector<std::string> labels(std::initializer_list<const char*> xs) { return {xs.begin(), xs.end()}; }

}  // namespace

TEST_CASE("surface normalization") {
  CHECK(normalize_surface("  Apples ") == "apples");
  CHECK(normalize_surface("Traffic   Light") == "traffic light");
  CHECK(normalize_surface("") == "");
}

TEST_CASE("plural rules") {
  CHECK(pluralize("apple") == "apples");
  CHECK(pluralize("bus") == "buses");
  CHECK(pluralize("box") == "boxes");
  CHECK(pluralize("waltz") == "waltzes");
  CHECK(pluralize("bench") == "benches");
  CHECK(pluralize("brush") == "brushes");
  CHECK(pluralize("pony") == "ponies");
  CHECK(pluralize("toy") == "toys");
  CHECK(pluralize("person") == "people");
  CHECK(pluralize("mouse") == "mice");
  CHECK(pluralize("knife") == "knives");
  CHECK(pluralize("sheep") == "sheep");
  CHECK(pluralize("hot dog") == "hot dogs");
  CHECK(pluralize("wine glass") == "wine glasses");
  CHECK(pluralize("ox", {{"ox", "oxen"}}) == "oxen");
}

TEST_CASE("apple expands to its plural") {
  const auto set = EntitySet::build(labels({"apple"}), {});
  CHECK(set.surface_map().size() == 2);
  CHECK(set.find("apple") == "apple");
  CHECK(set.find("apples") == "apple");
  CHECK(set.find("Apples") == "apple");
  CHECK_FALSE(set.find("the").has_value());
}

TEST_CASE("handbag synonyms") {
  const SynonymTable syn{{"handbag", {"bag", "pocketbook", "purse"}}};
  const auto set = EntitySet::build(labels({"handbag"}), syn);
  for (const char* s : {"handbag", "handbags", "bag", "pocketbook", "purse"}) {
    CHECK(set.find(s) == "handbag");
  }
  CHECK(contains(set, "purse") == "handbag");
  CHECK(set.surface_map().size() >= set.base_labels().size());
}

TEST_CASE("empty inputs give an empty set") {
  const auto set = EntitySet::build({}, {});
  CHECK(set.empty());
  CHECK(set.surface_map().empty());
  CHECK_FALSE(set.find("cat").has_value());
}

TEST_CASE("synonym rows must reference a base label") {
  const SynonymTable syn{{"purse", {"bag"}}};
  CHECK_THROWS_AS(EntitySet::build(labels({"handbag"}), syn), InputError);
}

TEST_CASE("first writer wins on shared surfaces and the conflict is reported") {
  std::vector<std::string> warnings;
  fisao::log::ScopedWarningSink sink([&](std::string_view m) { warnings.emplace_back(m); });
  const SynonymTable syn{{"boat", {"ship"}}, {"ship", {"boat", "vessel"}}};
  const auto set = EntitySet::build(labels({"boat", "ship"}), syn);
  CHECK(set.find("boat") == "boat");
  CHECK(set.find("ship") == "ship");
  CHECK(set.find("vessel") == "ship");
  REQUIRE(set.conflicts().size() == 2);
  CHECK(set.conflicts()[0].surface == "ship");
  CHECK(set.conflicts()[0].kept == "ship");
  CHECK(set.conflicts()[0].rejected == "boat");
  CHECK(warnings.size() == 2);
}

TEST_CASE("every base label resolves to itself and build is deterministic") {
  const auto base = labels({"person", "Dining Table", "sheep", "fish", "bus"});
  const auto a = EntitySet::build(base, {});
  const auto b = EntitySet::build(base, {});
  CHECK(a.surface_map() == b.surface_map());
  for (const auto& l : a.base_labels()) CHECK(a.find(l) == l);
  CHECK(a.find("dining table") == "dining table");
  CHECK(a.find("people") == "person");
  for (const auto& [surface, canonical] : a.surface_map()) CHECK(surface == normalize_surface(surface));
}

TEST_CASE("match_spans") {
  const auto set = EntitySet::build(labels({"cat", "traffic light"}), {});
  const std::vector<std::string> a{"a", "cat", "sat"};
  CHECK(match_spans(a, set) == std::vector<EntityMatch>{{1, "cat"}});
  const std::vector<std::string> b{"cats", "and", "cat"};
  CHECK(match_spans(b, set) == std::vector<EntityMatch>{{0, "cat"}, {2, "cat"}});
  CHECK(match_spans(std::vector<std::string>{}, set).empty());
  // Multi-word surfaces are never matched token by token.
  const std::vector<std::string> c{"traffic", "light"};
  CHECK(match_spans(c, set).empty());
}

TEST_CASE("lexicon files") {
  test::TempDir dir;
  const auto lbl = dir.write("labels.txt", "# objects\napple\n\nHandbag\n");
  CHECK(read_label_file(lbl) == labels({"apple", "handbag"}));
  const auto syn = dir.write("syn.tsv", "handbag\tbag\tpurse\n\napple\tpippin\n");
  const auto table = read_synonym_table(syn);
  REQUIRE(table.size() == 2);
  CHECK(table[0].canonical == "handbag");
  CHECK(table[0].synonyms == labels({"bag", "purse"}));
  const auto irr = dir.write("irr.tsv", "ox\toxen\n");
  CHECK(read_irregular_plurals(irr).at("ox") == "oxen");
  CHECK_THROWS_AS(read_irregular_plurals(dir.write("bad.tsv", "ox\n")), InputError);
  CHECK_THROWS_AS(read_label_file(dir / "absent.txt"), InputError);

  const auto set = EntitySet::build(read_label_file(lbl), table);
  CHECK(set.find("purse") == "handbag");
  CHECK(set.find("pippins") == std::nullopt);
  CHECK(set.find("pippin") == "apple");
}
