#include "fisao/planted.hpp"

#include <algorithm>
#include <numeric>

#include "fisao/error.hpp"
#include "fisao/random.hpp"

namespace fisao {

void CorpusConfig::validate() const {
  if (captions_per_image == 0) throw ConfigError("corpus: captions_per_image must be >= 1");
  if (objects_per_caption == 0) throw ConfigError("corpus: objects_per_caption must be >= 1");
  if (caption_length < objects_per_caption) throw ConfigError("corpus: caption_length must hold every object");
  if (!(hallucinated_share >= 0.0 && hallucinated_share <= 1.0)) {
    throw ConfigError("corpus: hallucinated_share must lie in [0, 1]");
  }
}

std::vector<AnnotatedResponse> planted_corpus(const SynthResult& synth, const CorpusConfig& cfg) {
  cfg.validate();
  if (synth.filler_tokens.empty() && cfg.caption_length > cfg.objects_per_caption) {
    throw ConfigError("corpus: captions need filler tokens");
  }
  Rng rng(cfg.seed);
  std::vector<AnnotatedResponse> corpus;
  const auto n_hal = static_cast<std::size_t>(
      std::llround(cfg.hallucinated_share * static_cast<double>(cfg.captions_per_image)));

  for (const auto& image : synth.image_ids) {
    const auto& planted = synth.labels.at(image);
    if (planted.gt.size() < cfg.objects_per_caption) {
      throw ConfigError("corpus: too few planted correct objects for objects_per_caption");
    }
    if (n_hal > 0 && planted.hal.empty()) throw ConfigError("corpus: image has no planted hallucinated objects");

    for (std::size_t c = 0; c < cfg.captions_per_image; ++c) {
      const bool hallucinated = c < n_hal;
      std::vector<std::string> gt = planted.gt;
      std::shuffle(gt.begin(), gt.end(), rng);
      gt.resize(cfg.objects_per_caption);
      std::string hal;
      if (hallucinated) {
        hal = planted.hal[std::uniform_int_distribution<std::size_t>(0, planted.hal.size() - 1)(rng)];
        gt.pop_back();
      }

      std::vector<std::size_t> slots(cfg.caption_length);
      std::iota(slots.begin(), slots.end(), std::size_t{0});
      std::shuffle(slots.begin(), slots.end(), rng);

      AnnotatedResponse r;
      r.image_id = image;
      r.tokens.resize(cfg.caption_length);
      std::size_t k = 0;
      for (const auto& g : gt) {
        r.tokens[slots[k]] = g;
        r.gt_positions.insert(slots[k++]);
      }
      if (hallucinated) {
        r.tokens[slots[k]] = hal;
        r.hal_positions.insert(slots[k++]);
      }
      std::uniform_int_distribution<std::size_t> pick(0, synth.filler_tokens.empty() ? 0 : synth.filler_tokens.size() - 1);
      for (; k < cfg.caption_length; ++k) r.tokens[slots[k]] = synth.filler_tokens[pick(rng)];
      corpus.push_back(std::move(r));
    }
  }
  return corpus;
}

Vocabulary planted_vocabulary(const SynthResult& synth) {
  std::vector<std::string> tokens = synth.entity_tokens;
  tokens.insert(tokens.end(), synth.filler_tokens.begin(), synth.filler_tokens.end());
  return Vocabulary::with_end_token(std::move(tokens));
}

EntitySet planted_entities(const SynthResult& synth) { return EntitySet::build(synth.entity_tokens, {}); }

std::vector<TrainingDatum> planted_dataset(const SynthResult& synth, const Vocabulary& vocab,
                                           const std::vector<std::string>& prompt) {
  std::vector<TokenId> ids;
  for (const auto& w : prompt) {
    auto id = vocab.id(w);
    if (!id) throw InputError("prompt word '" + w + "' is not in the vocabulary");
    ids.push_back(*id);
  }
  std::vector<TrainingDatum> out;
  for (const auto& image : synth.image_ids) out.push_back({ids, image});
  return out;
}

std::vector<LabeledScore> labeled_scores(std::span<const AnnotatedResponse> corpus, const EmbeddingCache& cache) {
  std::vector<LabeledScore> out;
  for (const auto& r : corpus) {
    r.validate();
    const auto& image = cache.image(r.image_id);
    for (auto p : r.gt_positions) {
      out.push_back({score_token(cache.token(r.tokens[p]), image), ScoreLabel::gt, Granularity::token});
    }
    for (auto p : r.hal_positions) {
      out.push_back({score_token(cache.token(r.tokens[p]), image), ScoreLabel::hal, Granularity::token});
    }
    std::vector<const EmbeddingVector*> vecs;
    for (const auto& t : r.tokens) vecs.push_back(&cache.token(t));
    out.push_back({score_sentence(vecs, image), r.hal_positions.empty() ? ScoreLabel::gt : ScoreLabel::hal,
                   Granularity::sentence});
  }
  return out;
}

}  // namespace fisao
