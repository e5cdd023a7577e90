#include <iostream>
#include <memory>

#include "commands.hpp"
#include "common.hpp"
#include "fisao/embed_store.hpp"
#include "fisao/error.hpp"
#include "fisao/reward_core.hpp"

namespace fisao::cli {
namespace {

struct BaselinesState {
  CommonFlags common;
  Schema schema;
  std::string cache;
  std::string corpus;
};

void run(BaselinesState& st) {
  apply_config(st.common, st.schema);
  if (st.cache.empty()) throw InputError("baselines: --cache is required");
  if (st.corpus.empty()) throw InputError("baselines: --corpus is required");
  const OutputDir out(st.common.out, st.common.force);
  out.claim({"baselines.json", "effective_config.json"});

  const auto cache = load_cache(st.cache);
  const auto corpus = load_corpus(st.corpus);
  const auto stats = estimate_baselines(corpus, cache);
  save_baselines(stats, out.file("baselines.json"));
  out.write_effective_config("baselines", st.schema.dump());

  std::cout.precision(17);
  std::cout << "mu_gt " << stats.mu_gt << '\n'
            << "mu_hal " << stats.mu_hal << '\n'
            << "s_min " << stats.s_min << '\n'
            << "s_max " << stats.s_max << '\n'
            << "n_gt " << stats.n_gt << '\n'
            << "n_hal " << stats.n_hal << '\n';
}

}  // namespace

void add_baselines(CLI::App& root) {
  auto* app = root.add_subcommand("baselines", "Estimate mean scores of correct and hallucinated objects");
  auto st = std::make_shared<BaselinesState>();
  st->schema.field("cache", st->cache, "Embedding cache (JSONL or binary)");
  st->schema.field("corpus", st->corpus, "Annotated corpus (JSONL)");
  st->schema.bind(*app);
  add_common_flags(*app, st->common);
  app->callback([st] { run(*st); });
}

}  // namespace fisao::cli
