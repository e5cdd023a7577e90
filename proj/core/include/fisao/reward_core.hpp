#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fisao/embed_store.hpp"
#include "fisao/entity_lexicon.hpp"

namespace fisao {

/// Corpus statistics that anchor the reward: the mean verifier scores of
/// correct and hallucinated object tokens, and the empirical score range.
struct BaselineStats {
  double mu_gt = 0.0;
  double mu_hal = 0.0;
  double s_min = 0.0;
  double s_max = 0.0;
  std::size_t n_gt = 0;
  std::size_t n_hal = 0;

  friend bool operator==(const BaselineStats&, const BaselineStats&) = default;
};

void to_json(nlohmann::json& j, const BaselineStats& s);
void from_json(const nlohmann::json& j, BaselineStats& s);
void save_baselines(const BaselineStats& stats, const std::filesystem::path& path);
BaselineStats load_baselines(const std::filesystem::path& path);

/// Which denominator the hallucinated branch uses. `as_intended` divides by
/// (mu_hal - margin) - s_min so the branch spans [-1, 0); `as_printed` keeps
/// (mu_gt - margin) - s_min.
enum class HalDenominator { as_intended, as_printed };

std::string_view to_string(HalDenominator v);
HalDenominator parse_hal_denominator(std::string_view text);

struct RewardConfig {
  double margin = 10.0;
  double kl_scale = 0.2;
  HalDenominator hal_denominator = HalDenominator::as_intended;

  void validate() const;
};

/// A response whose object-token positions are labelled correct or hallucinated.
struct AnnotatedResponse {
  std::string image_id;
  std::vector<std::string> tokens;
  std::set<std::size_t> gt_positions;
  std::set<std::size_t> hal_positions;

  /// Throws InputError if the position sets overlap or fall out of range.
  void validate() const;
};

void to_json(nlohmann::json& j, const AnnotatedResponse& r);
void from_json(const nlohmann::json& j, AnnotatedResponse& r);
std::vector<AnnotatedResponse> read_corpus_jsonl(std::istream& in);
std::vector<AnnotatedResponse> load_corpus(const std::filesystem::path& path);
void save_corpus(std::span<const AnnotatedResponse> corpus, const std::filesystem::path& path);

enum class RewardBranch { positive, negative, dead_zone, non_entity };
std::string_view to_string(RewardBranch b);

struct TokenReward {
  std::size_t position = 0;
  double score = 0.0;
  double kl = 0.0;
  /// Normalized component before the KL penalty; always in [-1, 1].
  double normalized = 0.0;
  double reward = 0.0;
  RewardBranch branch = RewardBranch::non_entity;
};

/// Pooled means over all labelled positions (denominator is the total count of
/// each set across the corpus) plus the min/max over both sets.
/// Warns when mu_gt <= mu_hal. Throws InputError on a missing embedding or an
/// empty gt or hal set.
BaselineStats estimate_baselines(std::span<const AnnotatedResponse> responses, const EmbeddingCache& cache);

/// (s - (mu_gt + margin)) / (s_max - (mu_gt + margin)), in (0, 1] for s in the
/// positive branch. Throws ConfigError when s_max <= mu_gt + margin.
double normalize_positive(double s, const BaselineStats& stats, double margin);

/// (s - (mu_hal - margin)) / denominator, in [-1, 0) for s in the negative
/// branch under `as_intended`. Throws ConfigError on a non-positive denominator.
double normalize_negative(double s, const BaselineStats& stats, double margin, HalDenominator variant);

/// Per-token reward. Tokens outside the entity set, and entity tokens with
/// mu_hal - margin <= s <= mu_gt + margin, get exactly zero. Otherwise the score
/// is clamped to [s_min, s_max], normalized, and kl_scale * kl is subtracted.
TokenReward token_reward(std::string_view token, double score, double kl, const EntitySet& set,
                         const BaselineStats& stats, const RewardConfig& cfg);

/// Applies token_reward at every position of a response. `kl_per_position`
/// must have one entry per token. Non-entity positions carry the score when an
/// embedding exists and NaN otherwise.
std::vector<TokenReward> trajectory_rewards(std::span<const std::string> tokens, std::string_view image_id,
                                            const EmbeddingCache& cache, const EntitySet& set,
                                            const BaselineStats& stats, const RewardConfig& cfg,
                                            std::span<const double> kl_per_position);

}  // namespace fisao
