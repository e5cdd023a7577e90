#include "fisao/reward_core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "fisao/error.hpp"
#include "fisao/log.hpp"

namespace fisao {

void to_json(nlohmann::json& j, const BaselineStats& s) {
  j = nlohmann::json{{"mu_gt", s.mu_gt}, {"mu_hal", s.mu_hal}, {"s_min", s.s_min},
                     {"s_max", s.s_max}, {"n_gt", s.n_gt},     {"n_hal", s.n_hal}};
}

void from_json(const nlohmann::json& j, BaselineStats& s) {
  j.at("mu_gt").get_to(s.mu_gt);
  j.at("mu_hal").get_to(s.mu_hal);
  j.at("s_min").get_to(s.s_min);
  j.at("s_max").get_to(s.s_max);
  j.at("n_gt").get_to(s.n_gt);
  j.at("n_hal").get_to(s.n_hal);
}

void save_baselines(const BaselineStats& stats, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write baselines '" + path.string() + "'");
  out << nlohmann::json(stats).dump(2) << '\n';
}

BaselineStats load_baselines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open baselines '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in).get<BaselineStats>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": malformed baselines (" + e.what() + ")");
  }
}

std::string_view to_string(HalDenominator v) {
  return v == HalDenominator::as_intended ? "as_intended" : "as_printed";
}

HalDenominator parse_hal_denominator(std::string_view text) {
  if (text == "as_intended") return HalDenominator::as_intended;
  if (text == "as_printed") return HalDenominator::as_printed;
  throw ConfigError("unknown hal_denominator_variant '" + std::string(text) + "'");
}

void RewardConfig::validate() const {
  if (!(margin >= 0.0)) throw ConfigError("reward margin must be >= 0");
  if (!(kl_scale >= 0.0)) throw ConfigError("kl_scale must be >= 0");
}

void AnnotatedResponse::validate() const {
  for (auto p : gt_positions) {
    if (p >= tokens.size()) throw InputError("response for '" + image_id + "': gt position out of range");
    if (hal_positions.contains(p)) {
      throw InputError("response for '" + image_id + "': position " + std::to_string(p) + " is both gt and hal");
    }
  }
  for (auto p : hal_positions) {
    if (p >= tokens.size()) throw InputError("response for '" + image_id + "': hal position out of range");
  }
}

void to_json(nlohmann::json& j, const AnnotatedResponse& r) {
  j = nlohmann::json{{"image_id", r.image_id},
                     {"tokens", r.tokens},
                     {"gt_positions", r.gt_positions},
                     {"hal_positions", r.hal_positions}};
}

void from_json(const nlohmann::json& j, AnnotatedResponse& r) {
  j.at("image_id").get_to(r.image_id);
  j.at("tokens").get_to(r.tokens);
  r.gt_positions = j.at("gt_positions").get<std::set<std::size_t>>();
  r.hal_positions = j.at("hal_positions").get<std::set<std::size_t>>();
}

std::vector<AnnotatedResponse> read_corpus_jsonl(std::istream& in) {
  std::vector<AnnotatedResponse> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto r = nlohmann::json::parse(line).get<AnnotatedResponse>();
      r.validate();
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw InputError("corpus line " + std::to_string(line_no) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<AnnotatedResponse> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open corpus '" + path.string() + "'");
  return read_corpus_jsonl(in);
}

void save_corpus(std::span<const AnnotatedResponse> corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write corpus '" + path.string() + "'");
  for (const auto& r : corpus) out << nlohmann::json(r).dump() << '\n';
}

std::string_view to_string(RewardBranch b) {
  switch (b) {
    case RewardBranch::positive:
      return "positive";
    case RewardBranch::negative:
      return "negative";
    case RewardBranch::dead_zone:
      return "dead_zone";
    case RewardBranch::non_entity:
      return "non_entity";
  }
  return "unknown";
}

BaselineStats estimate_baselines(std::span<const AnnotatedResponse> responses, const EmbeddingCache& cache) {
  double sum_gt = 0.0;
  double sum_hal = 0.0;
  BaselineStats stats;
  stats.s_min = std::numeric_limits<double>::infinity();
  stats.s_max = -std::numeric_limits<double>::infinity();

  for (const auto& r : responses) {
    r.validate();
    const auto& image = cache.image(r.image_id);
    for (auto p : r.gt_positions) {
      const double s = score_token(cache.token(r.tokens[p]), image);
      sum_gt += s;
      ++stats.n_gt;
      stats.s_min = std::min(stats.s_min, s);
      stats.s_max = std::max(stats.s_max, s);
    }
    for (auto p : r.hal_positions) {
      const double s = score_token(cache.token(r.tokens[p]), image);
      sum_hal += s;
      ++stats.n_hal;
      stats.s_min = std::min(stats.s_min, s);
      stats.s_max = std::max(stats.s_max, s);
    }
  }
  if (stats.n_gt == 0) throw InputError("estimate_baselines: corpus has no correct object tokens");
  if (stats.n_hal == 0) throw InputError("estimate_baselines: corpus has no hallucinated object tokens");
  stats.mu_gt = sum_gt / static_cast<double>(stats.n_gt);
  stats.mu_hal = sum_hal / static_cast<double>(stats.n_hal);
  if (stats.mu_gt <= stats.mu_hal) {
    log::warn("baselines: mu_gt (" + std::to_string(stats.mu_gt) + ") <= mu_hal (" + std::to_string(stats.mu_hal) +
              "); rewards will not separate correct from hallucinated objects");
  }
  return stats;
}

double normalize_positive(double s, const BaselineStats& stats, double margin) {
  const double boundary = stats.mu_gt + margin;
  const double denom = stats.s_max - boundary;
  if (!(denom > 0.0)) {
    throw ConfigError("positive reward branch is degenerate: s_max <= mu_gt + margin");
  }
  if (!(s > boundary)) throw InputError("normalize_positive: score is not above mu_gt + margin");
  return (s - boundary) / denom;
}

double normalize_negative(double s, const BaselineStats& stats, double margin, HalDenominator variant) {
  const double boundary = stats.mu_hal - margin;
  const double upper = variant == HalDenominator::as_intended ? boundary : stats.mu_gt - margin;
  const double denom = upper - stats.s_min;
  if (!(denom > 0.0)) {
    throw ConfigError("negative reward branch is degenerate: non-positive denominator");
  }
  if (!(s < boundary)) throw InputError("normalize_negative: score is not below mu_hal - margin");
  return (s - boundary) / denom;
}

TokenReward token_reward(std::string_view token, double score, double kl, const EntitySet& set,
                         const BaselineStats& stats, const RewardConfig& cfg) {
  if (!(kl >= 0.0)) throw InputError("token_reward: kl must be >= 0");
  TokenReward out;
  out.score = score;
  out.kl = kl;
  if (!set.find(token)) {
    out.branch = RewardBranch::non_entity;
    return out;
  }
  const double upper = stats.mu_gt + cfg.margin;
  const double lower = stats.mu_hal - cfg.margin;
  if (score > upper) {
    out.branch = RewardBranch::positive;
    out.normalized = normalize_positive(std::min(score, stats.s_max), stats, cfg.margin);
  } else if (score < lower) {
    out.branch = RewardBranch::negative;
    if (!(stats.s_min < lower)) {
      throw ConfigError("negative reward branch is degenerate: s_min >= mu_hal - margin");
    }
    // as_printed can undershoot -1 when mu_gt < mu_hal; the bound is enforced here.
    out.normalized =
        std::max(-1.0, normalize_negative(std::max(score, stats.s_min), stats, cfg.margin, cfg.hal_denominator));
  } else {
    out.branch = RewardBranch::dead_zone;
    return out;
  }
  out.reward = out.normalized - cfg.kl_scale * kl;
  return out;
}

std::vector<TokenReward> trajectory_rewards(std::span<const std::string> tokens, std::string_view image_id,
                                            const EmbeddingCache& cache, const EntitySet& set,
                                            const BaselineStats& stats, const RewardConfig& cfg,
                                            std::span<const double> kl_per_position) {
  if (kl_per_position.size() != tokens.size()) {
    throw InputError("trajectory_rewards: kl list length differs from token count");
  }
  const auto& image = cache.image(image_id);
  std::vector<TokenReward> out;
  out.reserve(tokens.size());
  std::vector<bool> is_entity(tokens.size(), false);
  for (const auto& m : match_spans(tokens, set)) is_entity[m.position] = true;

  for (std::size_t t = 0; t < tokens.size(); ++t) {
    TokenReward r;
    if (is_entity[t]) {
      r = token_reward(tokens[t], score_token(cache.token(tokens[t]), image), kl_per_position[t], set, stats, cfg);
    } else {
      const auto* vec = cache.find(EmbeddingKind::token, tokens[t]);
      r.score = vec ? score_token(*vec, image) : std::numeric_limits<double>::quiet_NaN();
      r.kl = kl_per_position[t];
      r.branch = RewardBranch::non_entity;
    }
    r.position = t;
    out.push_back(r);
  }
  return out;
}

}  // namespace fisao
