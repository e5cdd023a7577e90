#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fisao/embed_store.hpp"
#include "fisao/entity_lexicon.hpp"
#include "fisao/policy.hpp"
#include "fisao/reward_core.hpp"

namespace fisao {

/// How the per-token reward enters the clipped surrogate.
///  - as_printed: min{r, clip(r, 1-eps, 1+eps)} * R, the reward outside the min.
///  - standard:   min{r * R, clip(r, 1-eps, 1+eps) * R}.
/// The two agree for R >= 0 and differ for negative rewards.
enum class ObjectiveForm { as_printed, standard };
enum class OptimizerKind { sgd, adam };

std::string_view to_string(ObjectiveForm f);
ObjectiveForm parse_objective_form(std::string_view text);
std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view text);

struct PPOConfig {
  double clip_eps = 0.2;
  std::size_t ppo_epochs = 4;
  double step_size = 0.3;
  double discount = 1.0;
  std::size_t max_len = 8;
  std::uint64_t seed = 1;

  ObjectiveForm objective = ObjectiveForm::as_printed;
  OptimizerKind optimizer = OptimizerKind::sgd;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// Trajectories per update; 1 follows the per-sample loop.
  std::size_t batch_size = 1;
  /// Passes over the dataset; 0 leaves the policy untouched.
  std::size_t dataset_passes = 1;
  std::size_t context_window = 4;

  void validate() const;
};

/// One sampled rollout; all per-step lists are parallel.
struct Trajectory {
  std::string image_id;
  std::vector<TokenId> prompt;
  std::vector<TokenId> actions;
  std::vector<double> old_log_probs;
  std::vector<double> rewards;
  std::vector<ContextFeatures> contexts;

  std::size_t size() const noexcept { return actions.size(); }
  /// Throws InputError on length mismatches, T == 0, or a positive log-prob.
  void validate() const;
};

/// exp(log pi_theta(a_t | s_t) - old_log_probs[t]).
double ratio(const PolicyParams& theta, const Trajectory& traj, std::size_t t);

double clipped_objective(const PolicyParams& theta, const Trajectory& traj, const PPOConfig& cfg);

/// Gradient of clipped_objective. Terms where the min selects the clipped
/// (constant) branch contribute nothing.
PolicyGradient objective_gradient(const PolicyParams& theta, const Trajectory& traj, const PPOConfig& cfg);

struct TrainingRecord {
  std::size_t iteration = 0;
  double mean_reward = 0.0;
  double mean_kl = 0.0;
  double mean_ratio = 0.0;
  double objective = 0.0;
  /// NaN when no entity token was sampled.
  double entity_token_mean_score = 0.0;
  /// Verifier scores of every sampled entity token in this update.
  std::vector<double> entity_scores;
};

struct TrainingLog {
  std::vector<TrainingRecord> records;

  /// iteration,mean_reward,mean_kl,mean_ratio,objective,entity_token_mean_score
  void write_csv(std::ostream& out) const;
};

struct TrainingDatum {
  std::vector<TokenId> prompt;
  std::string image_id;
};

/// Everything the reward needs besides the policy.
struct RewardContext {
  const EmbeddingCache& cache;
  const Vocabulary& vocab;
  const EntitySet& entities;
  const BaselineStats& stats;
  RewardConfig reward;
};

struct TrainResult {
  PolicyParams params;
  TrainingLog log;
};

struct WarmStartConfig {
  std::size_t epochs = 20;
  double step_size = 0.5;

  void validate() const;
};

/// Maximum-likelihood fit of the policy to annotated captions: each caption,
/// followed by the end token, is one sequence after `prompt`. One step per
/// caption, on the log-likelihood averaged over its tokens. Throws InputError
/// on tokens outside the vocabulary.
PolicyParams supervised_warm_start(const PolicyParams& initial, const ContextBuilder& builder,
                                   std::span<const AnnotatedResponse> captions, std::span<const TokenId> prompt,
                                   const WarmStartConfig& cfg);

/// Clipped-PPO with per-token rewards. For every batch: sample with the
/// current policy, score each token (KL measured against the initial policy,
/// which stays frozen), then take `ppo_epochs` gradient-ascent steps.
TrainResult train(std::span<const TrainingDatum> dataset, const PolicyParams& initial, const RewardContext& deps,
                  const PPOConfig& cfg);

}  // namespace fisao
