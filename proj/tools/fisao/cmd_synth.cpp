#include <iostream>
#include <memory>
#include <set>

#include "commands.hpp"
#include "common.hpp"
#include "fisao/analysis.hpp"
#include "fisao/error.hpp"
#include "fisao/planted.hpp"
#include "fisao/random.hpp"

namespace fisao::cli {
namespace {

struct SynthState {
  CommonFlags common;
  Schema schema;
  SynthConfig synth;
  CorpusConfig corpus;
  std::string format = "jsonl";
};

void run(SynthState& st) {
  apply_config(st.common, st.schema);
  if (st.format != "jsonl" && st.format != "binary") throw ConfigError("format must be 'jsonl' or 'binary'");
  st.corpus.seed = mix_seed(st.synth.seed, 1);
  st.synth.validate();
  st.corpus.validate();

  const OutputDir out(st.common.out, st.common.force);
  const std::string cache_name = st.format == "jsonl" ? "cache.jsonl" : "cache.bin";
  out.claim({cache_name, "planted_labels.json", "corpus.jsonl", "labels.txt", "vocab.txt", "scores.jsonl",
             "captions.jsonl", "effective_config.json"});

  const auto result = synth_cache(st.synth);
  const auto corpus = planted_corpus(result, st.corpus);
  const auto entities = planted_entities(result);

  save_cache(result.cache, out.file(cache_name), st.format == "jsonl" ? CacheFormat::jsonl : CacheFormat::binary);
  save_planted_labels(result.labels, out.file("planted_labels.json"));
  save_corpus(corpus, out.file("corpus.jsonl"));
  std::string labels;
  for (const auto& t : result.entity_tokens) labels += t + "\n";
  out.write_text("labels.txt", labels);
  planted_vocabulary(result).save(out.file("vocab.txt"));
  const auto scores = labeled_scores(corpus, result.cache);
  save_labeled_scores(scores, out.file("scores.jsonl"));

  std::vector<CaptionRecord> captions;
  for (const auto& r : corpus) {
    const auto& planted = result.labels.at(r.image_id);
    captions.push_back(make_caption_record(r.image_id, r.tokens, {planted.gt.begin(), planted.gt.end()}, entities));
  }
  save_caption_records(captions, out.file("captions.jsonl"));
  out.write_effective_config("synth", st.schema.dump());

  std::cout << "images " << result.image_ids.size() << '\n'
            << "entity_tokens " << result.entity_tokens.size() << '\n'
            << "filler_tokens " << result.filler_tokens.size() << '\n'
            << "records " << result.cache.size() << '\n'
            << "captions " << corpus.size() << '\n'
            << "output " << out.dir().string() << '\n';
}

}  // namespace

void add_synth(CLI::App& root) {
  auto* app = root.add_subcommand("synth", "Write a planted synthetic cache, labels, and annotated corpus");
  auto st = std::make_shared<SynthState>();
  auto& s = st->schema;
  s.field("seed", st->synth.seed, "Random seed");
  s.field("dim", st->synth.dim, "Embedding dimension");
  s.field("n_images", st->synth.n_images, "Number of images");
  s.field("gt_alignment", st->synth.gt_alignment, "Score of planted correct tokens");
  s.field("hal_alignment", st->synth.hal_alignment, "Score of planted hallucinated tokens");
  s.field("noise_scale", st->synth.noise_scale, "Std-dev of score noise");
  s.field("n_entity_tokens", st->synth.n_entity_tokens, "Number of entity tokens");
  s.field("gt_per_image", st->synth.gt_per_image, "Correct tokens planted per image");
  s.field("hal_per_image", st->synth.hal_per_image, "Hallucinated tokens planted per image");
  s.field("n_filler_tokens", st->synth.n_filler_tokens, "Number of non-entity tokens");
  s.field("filler_scale", st->synth.filler_scale, "Std-dev of filler coordinates");
  s.field("captions_per_image", st->corpus.captions_per_image, "Annotated captions per image");
  s.field("caption_length", st->corpus.caption_length, "Tokens per caption");
  s.field("objects_per_caption", st->corpus.objects_per_caption, "Objects mentioned per caption");
  s.field("hallucinated_share", st->corpus.hallucinated_share, "Share of captions with a hallucinated object");
  s.field("format", st->format, "Cache encoding: jsonl or binary");
  s.bind(*app);
  add_common_flags(*app, st->common);
  app->callback([st] { run(*st); });
}

}  // namespace fisao::cli
