#include "fisao/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "fisao/error.hpp"
#include "fisao/random.hpp"

namespace fisao {
namespace {

struct Term {
  double ratio;
  double value;
  bool unclipped_selected;
};

Term surrogate_term(double r, double reward, const PPOConfig& cfg) {
  const double clipped = std::clamp(r, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
  if (cfg.objective == ObjectiveForm::as_printed) {
    const bool unclipped = r <= clipped;
    return {r, (unclipped ? r : clipped) * reward, unclipped};
  }
  const double a = r * reward;
  const double b = clipped * reward;
  const bool unclipped = a <= b;
  return {r, unclipped ? a : b, unclipped};
}

class Optimizer {
 public:
  Optimizer(const PPOConfig& cfg, const PolicyParams& shape)
      : cfg_(cfg),
        m_(PolicyParams::zeros(shape.vocab_size(), shape.feature_dim())),
        v_(PolicyParams::zeros(shape.vocab_size(), shape.feature_dim())) {}

  void ascend(PolicyParams& theta, const PolicyGradient& g) {
    if (cfg_.optimizer == OptimizerKind::sgd) {
      theta.weights += cfg_.step_size * g.weights;
      theta.bias += cfg_.step_size * g.bias;
      return;
    }
    ++t_;
    const double b1 = cfg_.adam_beta1;
    const double b2 = cfg_.adam_beta2;
    m_.weights = b1 * m_.weights + (1 - b1) * g.weights;
    m_.bias = b1 * m_.bias + (1 - b1) * g.bias;
    v_.weights = b2 * v_.weights.array() + (1 - b2) * g.weights.array().square();
    v_.bias = b2 * v_.bias.array() + (1 - b2) * g.bias.array().square();
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    theta.weights.array() +=
        cfg_.step_size * (m_.weights.array() / c1) / ((v_.weights.array() / c2).sqrt() + cfg_.adam_epsilon);
    theta.bias.array() += cfg_.step_size * (m_.bias.array() / c1) / ((v_.bias.array() / c2).sqrt() + cfg_.adam_epsilon);
  }

 private:
  const PPOConfig& cfg_;
  PolicyParams m_;
  PolicyParams v_;
  std::size_t t_ = 0;
};

double mean_or_nan(const std::vector<double>& xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace

std::string_view to_string(ObjectiveForm f) { return f == ObjectiveForm::as_printed ? "as_printed" : "standard"; }

ObjectiveForm parse_objective_form(std::string_view text) {
  if (text == "as_printed") return ObjectiveForm::as_printed;
  if (text == "standard") return ObjectiveForm::standard;
  throw ConfigError("unknown objective form '" + std::string(text) + "'");
}

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view text) {
  if (text == "sgd") return OptimizerKind::sgd;
  if (text == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + std::string(text) + "'");
}

void PPOConfig::validate() const {
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw ConfigError("clip_eps must lie in (0, 1)");
  if (ppo_epochs < 1) throw ConfigError("ppo_epochs must be >= 1");
  if (!(step_size > 0.0)) throw ConfigError("step_size must be > 0");
  if (!(discount > 0.0 && discount <= 1.0)) throw ConfigError("discount must lie in (0, 1]");
  if (max_len < 1) throw ConfigError("max_len must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (context_window < 1) throw ConfigError("context_window must be >= 1");
}

void Trajectory::validate() const {
  const auto n = actions.size();
  if (n == 0) throw InputError("trajectory must have at least one step");
  if (old_log_probs.size() != n || rewards.size() != n || contexts.size() != n) {
    throw InputError("trajectory lists have different lengths");
  }
  for (double lp : old_log_probs) {
    if (!(lp <= 0.0)) throw InputError("trajectory old log-probabilities must be <= 0");
  }
}

double ratio(const PolicyParams& theta, const Trajectory& traj, std::size_t t) {
  if (t >= traj.size()) throw InputError("ratio: step index out of range");
  return std::exp(log_prob(theta, traj.contexts[t], traj.actions[t]) - traj.old_log_probs[t]);
}

double clipped_objective(const PolicyParams& theta, const Trajectory& traj, const PPOConfig& cfg) {
  traj.validate();
  double total = 0.0;
  double weight = 1.0;
  for (std::size_t t = 0; t < traj.size(); ++t, weight *= cfg.discount) {
    if (traj.rewards[t] == 0.0) continue;
    total += weight * surrogate_term(ratio(theta, traj, t), traj.rewards[t], cfg).value;
  }
  return total;
}

PolicyGradient objective_gradient(const PolicyParams& theta, const Trajectory& traj, const PPOConfig& cfg) {
  traj.validate();
  auto grad = PolicyParams::zeros(theta.vocab_size(), theta.feature_dim());
  double weight = 1.0;
  for (std::size_t t = 0; t < traj.size(); ++t, weight *= cfg.discount) {
    if (traj.rewards[t] == 0.0) continue;
    const double r = ratio(theta, traj, t);
    if (!surrogate_term(r, traj.rewards[t], cfg).unclipped_selected) continue;
    // d/dθ [r R] = r R ∇log π
    auto g = grad_log_prob(theta, traj.contexts[t], traj.actions[t]);
    g *= weight * r * traj.rewards[t];
    grad += g;
  }
  return grad;
}

void WarmStartConfig::validate() const {
  if (!(step_size > 0.0)) throw ConfigError("warm start step_size must be > 0");
}

PolicyParams supervised_warm_start(const PolicyParams& initial, const ContextBuilder& builder,
                                   std::span<const AnnotatedResponse> captions, std::span<const TokenId> prompt,
                                   const WarmStartConfig& cfg) {
  cfg.validate();
  const auto& vocab = builder.vocabulary();
  if (initial.vocab_size() != vocab.size() || initial.feature_dim() != builder.feature_dim()) {
    throw DimensionError("warm start: policy shape does not match vocabulary and context features");
  }
  const auto end = vocab.end_id();
  if (!end) throw InputError("warm start: vocabulary has no end token");

  std::vector<std::vector<TokenId>> sequences;
  for (const auto& c : captions) {
    std::vector<TokenId> seq;
    for (const auto& t : c.tokens) {
      const auto id = vocab.id(t);
      if (!id) throw InputError("warm start: token '" + t + "' is not in the vocabulary");
      seq.push_back(*id);
    }
    seq.push_back(*end);
    sequences.push_back(std::move(seq));
  }

  PolicyParams theta = initial;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < captions.size(); ++i) {
      std::vector<TokenId> history(prompt.begin(), prompt.end());
      auto grad = PolicyParams::zeros(theta.vocab_size(), theta.feature_dim());
      for (TokenId tok : sequences[i]) {
        grad += grad_log_prob(theta, builder.build(captions[i].image_id, history), tok);
        history.push_back(tok);
      }
      grad *= cfg.step_size / static_cast<double>(sequences[i].size());
      theta += grad;
    }
  }
  return theta;
}

void TrainingLog::write_csv(std::ostream& out) const {
  out << "iteration,mean_reward,mean_kl,mean_ratio,objective,entity_token_mean_score\n";
  const auto old_precision = out.precision(17);
  for (const auto& r : records) {
    out << r.iteration << ',' << r.mean_reward << ',' << r.mean_kl << ',' << r.mean_ratio << ',' << r.objective << ',';
    if (std::isnan(r.entity_token_mean_score)) {
      out << "nan";
    } else {
      out << r.entity_token_mean_score;
    }
    out << '\n';
  }
  out.precision(old_precision);
}

TrainResult train(std::span<const TrainingDatum> dataset, const PolicyParams& initial, const RewardContext& deps,
                  const PPOConfig& cfg) {
  cfg.validate();
  deps.reward.validate();
  const PolicyParams reference = initial;
  TrainResult out{initial, {}};
  if (dataset.empty() || cfg.dataset_passes == 0) return out;

  const ContextBuilder builder(deps.cache, deps.vocab, cfg.context_window);
  if (initial.vocab_size() != deps.vocab.size() || initial.feature_dim() != builder.feature_dim()) {
    throw DimensionError("train: policy shape does not match vocabulary and context features");
  }
  Optimizer optimizer(cfg, initial);
  PolicyParams& theta = out.params;

  const std::size_t total = dataset.size() * cfg.dataset_passes;
  std::size_t iteration = 0;
  for (std::size_t start = 0; start < total; start += cfg.batch_size, ++iteration) {
    const std::size_t stop = std::min(total, start + cfg.batch_size);
    std::vector<Trajectory> batch;
    TrainingRecord rec;
    rec.iteration = iteration;
    double reward_sum = 0.0;
    double kl_sum = 0.0;
    std::size_t steps = 0;

    for (std::size_t k = start; k < stop; ++k) {
      const auto& datum = dataset[k % dataset.size()];
      auto sampled = sample_response(theta, builder, datum.image_id, datum.prompt, cfg.max_len, mix_seed(cfg.seed, k));

      Trajectory traj;
      traj.image_id = datum.image_id;
      traj.prompt = datum.prompt;
      std::vector<std::string> words;
      std::vector<double> kls;
      for (std::size_t t = 0; t < sampled.tokens.size(); ++t) {
        traj.actions.push_back(sampled.tokens[t].token);
        traj.old_log_probs.push_back(sampled.tokens[t].log_prob);
        words.push_back(deps.vocab.token(sampled.tokens[t].token));
        kls.push_back(kl_next_token(reference, theta, sampled.contexts[t]));
      }
      traj.contexts = std::move(sampled.contexts);
      const auto rewards =
          trajectory_rewards(words, datum.image_id, deps.cache, deps.entities, deps.stats, deps.reward, kls);
      for (const auto& r : rewards) {
        traj.rewards.push_back(r.reward);
        reward_sum += r.reward;
        kl_sum += r.kl;
        ++steps;
        if (r.branch != RewardBranch::non_entity) rec.entity_scores.push_back(r.score);
      }
      batch.push_back(std::move(traj));
    }

    for (std::size_t epoch = 0; epoch < cfg.ppo_epochs; ++epoch) {
      auto grad = PolicyParams::zeros(theta.vocab_size(), theta.feature_dim());
      for (const auto& traj : batch) grad += objective_gradient(theta, traj, cfg);
      optimizer.ascend(theta, grad);
    }

    double ratio_sum = 0.0;
    for (const auto& traj : batch) {
      rec.objective += clipped_objective(theta, traj, cfg);
      for (std::size_t t = 0; t < traj.size(); ++t) ratio_sum += ratio(theta, traj, t);
    }
    const auto n = static_cast<double>(steps);
    rec.mean_reward = reward_sum / n;
    rec.mean_kl = kl_sum / n;
    rec.mean_ratio = ratio_sum / n;
    rec.entity_token_mean_score = mean_or_nan(rec.entity_scores);
    out.log.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace fisao
