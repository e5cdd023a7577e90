#include <array>
#include <cmath>
#include <iostream>
#include <memory>
#include <sstream>

#include "commands.hpp"
#include "common.hpp"
#include "fisao/embed_store.hpp"
#include "fisao/entity_lexicon.hpp"
#include "fisao/error.hpp"
#include "fisao/planted.hpp"
#include "fisao/reward_core.hpp"

namespace fisao::cli {
namespace {

struct ScoreState {
  CommonFlags common;
  Schema schema;
  std::string cache;
  std::string corpus;
  std::string baselines;
  std::string labels;
  std::string synonyms;
  RewardFlags reward;
};

void run(ScoreState& st) {
  apply_config(st.common, st.schema);
  if (st.cache.empty() || st.corpus.empty() || st.labels.empty()) {
    throw InputError("score: --cache, --corpus and --labels are required");
  }
  const auto reward = st.reward.resolve();
  const OutputDir out(st.common.out, st.common.force);
  out.claim({"token_rewards.csv", "scores.jsonl", "effective_config.json"});

  const auto cache = load_cache(st.cache);
  const auto corpus = load_corpus(st.corpus);
  const auto stats = st.baselines.empty() ? estimate_baselines(corpus, cache) : load_baselines(st.baselines);
  const auto base = read_label_file(st.labels);
  const auto entities =
      EntitySet::build(base, st.synonyms.empty() ? SynonymTable{} : read_synonym_table(st.synonyms));

  std::ostringstream csv;
  csv.precision(17);
  csv << "response,image_id,position,token,branch,score,normalized,reward\n";
  std::array<std::size_t, 4> branch_counts{};
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& r = corpus[i];
    const std::vector<double> kl(r.tokens.size(), 0.0);
    const auto rewards = trajectory_rewards(r.tokens, r.image_id, cache, entities, stats, reward, kl);
    for (const auto& t : rewards) {
      ++branch_counts[static_cast<std::size_t>(t.branch)];
      csv << i << ',' << r.image_id << ',' << t.position << ',' << r.tokens[t.position] << ',' << to_string(t.branch)
          << ',';
      if (std::isnan(t.score)) {
        csv << "nan";
      } else {
        csv << t.score;
      }
      csv << ',' << t.normalized << ',' << t.reward << '\n';
    }
  }
  out.write_text("token_rewards.csv", csv.str());
  save_labeled_scores(labeled_scores(corpus, cache), out.file("scores.jsonl"));
  out.write_effective_config("score", st.schema.dump());

  for (auto b : {RewardBranch::positive, RewardBranch::negative, RewardBranch::dead_zone, RewardBranch::non_entity}) {
    std::cout << to_string(b) << ' ' << branch_counts[static_cast<std::size_t>(b)] << '\n';
  }
}

}  // namespace

void add_score(CLI::App& root) {
  auto* app = root.add_subcommand("score", "Token-level rewards for an annotated corpus");
  auto st = std::make_shared<ScoreState>();
  auto& s = st->schema;
  s.field("cache", st->cache, "Embedding cache (JSONL or binary)");
  s.field("corpus", st->corpus, "Annotated corpus (JSONL)");
  s.field("baselines", st->baselines, "Baselines JSON (estimated from the corpus when omitted)");
  s.field("labels", st->labels, "Entity label file");
  s.field("synonyms", st->synonyms, "Tab-separated synonym table");
  st->reward.declare(s);
  s.bind(*app);
  add_common_flags(*app, st->common);
  app->callback([st] { run(*st); });
}

}  // namespace fisao::cli
