#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "commands.hpp"
#include "common.hpp"
#include "fisao/embed_store.hpp"
#include "fisao/entity_lexicon.hpp"
#include "fisao/error.hpp"
#include "fisao/policy.hpp"
#include "fisao/ppo.hpp"
#include "fisao/reward_core.hpp"

namespace fisao::cli {
namespace {

struct TrainState {
  CommonFlags common;
  Schema schema;
  std::string cache;
  std::string baselines;
  std::string labels;
  std::string synonyms;
  std::string vocab;
  std::string init;
  std::string prompt = "describe the image";
  std::string warm_start;
  WarmStartConfig warm;
  RewardFlags reward;
  PPOConfig ppo;
  std::string objective{to_string(PPOConfig{}.objective)};
  std::string optimizer{to_string(PPOConfig{}.optimizer)};
  bool margin_sweep = false;
};

double window_mean(const TrainingLog& log, std::size_t begin, std::size_t end) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = begin; i < end; ++i) {
    for (double s : log.records[i].entity_scores) {
      sum += s;
      ++n;
    }
  }
  return n == 0 ? std::nan("") : sum / static_cast<double>(n);
}

void write_run(const OutputDir& out, const TrainResult& result) {
  out.claim({"checkpoint.bin", "training_log.csv", "entity_scores.csv"});
  save_checkpoint(result.params, out.file("checkpoint.bin"));
  std::ostringstream log;
  result.log.write_csv(log);
  out.write_text("training_log.csv", log.str());
  std::ostringstream scores;
  scores.precision(17);
  scores << "iteration,score\n";
  for (const auto& r : result.log.records) {
    for (double s : r.entity_scores) scores << r.iteration << ',' << s << '\n';
  }
  out.write_text("entity_scores.csv", scores.str());
}

void report(std::string_view tag, const TrainResult& result) {
  const auto n = result.log.records.size();
  std::cout << tag << "updates " << n << '\n';
  if (n == 0) return;
  const auto tenth = std::max<std::size_t>(1, n / 10);
  std::cout << tag << "entity_score_first " << window_mean(result.log, 0, tenth) << '\n'
            << tag << "entity_score_last " << window_mean(result.log, n - tenth, n) << '\n';
}

void run(TrainState& st) {
  apply_config(st.common, st.schema);
  if (st.cache.empty() || st.baselines.empty() || st.labels.empty()) {
    throw InputError("train: --cache, --baselines and --labels are required");
  }
  st.ppo.objective = parse_objective_form(st.objective);
  st.ppo.optimizer = parse_optimizer(st.optimizer);
  st.ppo.validate();
  auto reward = st.reward.resolve();
  const OutputDir out(st.common.out, st.common.force);
  out.claim({"effective_config.json"});

  const auto cache = load_cache(st.cache);
  const auto stats = load_baselines(st.baselines);
  const auto entities = EntitySet::build(read_label_file(st.labels),
                                         st.synonyms.empty() ? SynonymTable{} : read_synonym_table(st.synonyms));
  const Vocabulary vocab =
      st.vocab.empty() ? Vocabulary::with_end_token(cache.ids(EmbeddingKind::token)) : Vocabulary::load(st.vocab);

  std::vector<TokenId> prompt;
  for (const auto& w : split_words(st.prompt)) {
    const auto id = vocab.id(w);
    if (!id) throw InputError("prompt word '" + w + "' is not in the vocabulary");
    prompt.push_back(*id);
  }
  std::vector<TrainingDatum> dataset;
  for (const auto& image : cache.ids(EmbeddingKind::image)) dataset.push_back({prompt, image});
  if (dataset.empty()) throw InputError("train: the cache holds no images");

  const ContextBuilder builder(cache, vocab, st.ppo.context_window);
  PolicyParams initial = st.init.empty() ? PolicyParams::zeros(vocab.size(), builder.feature_dim())
                                         : load_checkpoint(st.init);
  if (!st.warm_start.empty()) {
    initial = supervised_warm_start(initial, builder, load_corpus(st.warm_start), prompt, st.warm);
  }

  const std::vector<double> margins = st.margin_sweep ? std::vector<double>{5.0, 10.0, 20.0}
                                                      : std::vector<double>{reward.margin};
  for (double margin : margins) {
    reward.margin = margin;
    const RewardContext deps{cache, vocab, entities, stats, reward};
    const auto result = train(dataset, initial, deps, st.ppo);
    if (st.margin_sweep) {
      std::ostringstream name;
      name << "margin_" << margin;
      write_run(out.sub(name.str()), result);
      report(name.str() + " ", result);
    } else {
      write_run(out, result);
      report("", result);
    }
  }
  out.write_effective_config("train", st.schema.dump());
}

}  // namespace

void add_train(CLI::App& root) {
  auto* app = root.add_subcommand("train", "Clipped PPO with token-level verifier rewards");
  auto st = std::make_shared<TrainState>();
  auto& s = st->schema;
  s.field("cache", st->cache, "Embedding cache (JSONL or binary)");
  s.field("baselines", st->baselines, "Baselines JSON");
  s.field("labels", st->labels, "Entity label file");
  s.field("synonyms", st->synonyms, "Tab-separated synonym table");
  s.field("vocab", st->vocab, "Vocabulary file (default: cache tokens plus the end token)");
  s.field("init", st->init, "Initial checkpoint (default: uniform policy)");
  s.field("prompt", st->prompt, "Prompt words, space separated");
  st->reward.declare(s);
  s.field("seed", st->ppo.seed, "Random seed");
  s.field("clip_eps", st->ppo.clip_eps, "Ratio clipping range");
  s.field("ppo_epochs", st->ppo.ppo_epochs, "Gradient steps per batch");
  s.field("step_size", st->ppo.step_size, "Learning rate");
  s.field("warm_start", st->warm_start, "Annotated captions for a maximum-likelihood fit before PPO");
  s.field("warm_start_epochs", st->warm.epochs, "Passes over the warm-start captions");
  s.field("warm_start_step", st->warm.step_size, "Warm-start learning rate");
  s.field("discount", st->ppo.discount, "Per-step discount");
  s.field("max_len", st->ppo.max_len, "Maximum generated tokens");
  s.field("objective", st->objective, "Surrogate form: as_printed or standard");
  s.field("optimizer", st->optimizer, "sgd or adam");
  s.field("adam_beta1", st->ppo.adam_beta1, "Adam first-moment decay");
  s.field("adam_beta2", st->ppo.adam_beta2, "Adam second-moment decay");
  s.field("adam_epsilon", st->ppo.adam_epsilon, "Adam epsilon");
  s.field("batch_size", st->ppo.batch_size, "Trajectories per update");
  s.field("dataset_passes", st->ppo.dataset_passes, "Passes over the images; 0 keeps the initial policy");
  s.field("context_window", st->ppo.context_window, "History tokens averaged into the context");
  s.field("margin_sweep", st->margin_sweep, "Train once per margin in {5, 10, 20}");
  s.bind(*app);
  add_common_flags(*app, st->common);
  app->callback([st] { run(*st); });
}

}  // namespace fisao::cli
