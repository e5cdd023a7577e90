#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fisao/analysis.hpp"
#include "fisao/entity_lexicon.hpp"
#include "fisao/policy.hpp"
#include "fisao/ppo.hpp"
#include "fisao/reward_core.hpp"
#include "fisao/synth.hpp"

namespace fisao {

/// Annotated captions over a synthetic cache. Each caption holds
/// `objects_per_caption` planted objects among filler words; a hallucinated
/// caption swaps one correct object for a planted hallucinated one.
struct CorpusConfig {
  std::size_t captions_per_image = 16;
  std::size_t caption_length = 12;
  std::size_t objects_per_caption = 3;
  /// Share of captions per image that carry a hallucinated object.
  double hallucinated_share = 0.5;
  std::uint64_t seed = 11;

  void validate() const;
};

std::vector<AnnotatedResponse> planted_corpus(const SynthResult& synth, const CorpusConfig& cfg);

/// Entity tokens, then filler tokens, then the end token.
Vocabulary planted_vocabulary(const SynthResult& synth);

/// Entity set whose base labels are the synthetic entity tokens.
EntitySet planted_entities(const SynthResult& synth);

/// One datum per image, each with the same prompt.
std::vector<TrainingDatum> planted_dataset(const SynthResult& synth, const Vocabulary& vocab,
                                           const std::vector<std::string>& prompt = {"describe", "the", "image"});

/// Verifier scores of every annotated object (token granularity) and of every
/// caption as a whole, mean-pooled over all its tokens (sentence granularity).
/// A caption is labelled hal when it holds any hallucinated position.
std::vector<LabeledScore> labeled_scores(std::span<const AnnotatedResponse> corpus, const EmbeddingCache& cache);

}  // namespace fisao
