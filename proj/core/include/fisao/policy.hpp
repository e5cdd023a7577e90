#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "fisao/embed_store.hpp"

namespace fisao {

using TokenId = std::size_t;

/// Ordered, duplicate-free token list with dense ids.
class Vocabulary {
 public:
  static constexpr std::string_view kEndToken = "</s>";

  /// Throws InputError on an empty or duplicated token list.
  explicit Vocabulary(std::vector<std::string> tokens);

  /// Appends the reserved end token when it is missing.
  static Vocabulary with_end_token(std::vector<std::string> tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  std::optional<TokenId> id(std::string_view token) const;
  std::optional<TokenId> end_id() const { return id(kEndToken); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Policy state s_t: the image embedding followed by the mean embedding of the
/// last `window` context tokens (zeros when there is no history).
class ContextFeatures {
 public:
  ContextFeatures(const Eigen::VectorXd& image_part, const Eigen::VectorXd& history_part, std::size_t window);

  const Eigen::VectorXd& values() const noexcept { return values_; }
  Eigen::Index dim() const noexcept { return values_.size(); }
  auto image_part() const { return values_.head(image_dim_); }
  auto history_part() const { return values_.tail(values_.size() - image_dim_); }
  std::size_t window() const noexcept { return window_; }

 private:
  Eigen::VectorXd values_;
  Eigen::Index image_dim_;
  std::size_t window_;
};

/// Builds ContextFeatures for token-id histories against one embedding cache.
/// Tokens without an embedding (the end token) contribute zero vectors.
class ContextBuilder {
 public:
  ContextBuilder(const EmbeddingCache& cache, const Vocabulary& vocab, std::size_t window = 4);

  ContextFeatures build(std::string_view image_id, std::span<const TokenId> history) const;
  std::size_t feature_dim() const noexcept { return 2 * embed_dim_; }
  std::size_t window() const noexcept { return window_; }
  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  const EmbeddingCache& cache() const noexcept { return cache_; }

 private:
  const EmbeddingCache& cache_;
  const Vocabulary& vocab_;
  std::size_t window_;
  std::size_t embed_dim_;
  Eigen::MatrixXd token_embeddings_;  // embed_dim x |V|
};

/// Linear-softmax policy: logits = weights * features + bias.
struct PolicyParams {
  Eigen::MatrixXd weights;  // |V| x d_f
  Eigen::VectorXd bias;     // |V|

  static PolicyParams zeros(std::size_t vocab_size, std::size_t feature_dim);

  std::size_t vocab_size() const noexcept { return static_cast<std::size_t>(bias.size()); }
  std::size_t feature_dim() const noexcept { return static_cast<std::size_t>(weights.cols()); }

  PolicyParams& operator+=(const PolicyParams& other);
  PolicyParams& operator*=(double s);
  double squared_norm() const;

  friend bool operator==(const PolicyParams& a, const PolicyParams& b) {
    return a.weights.rows() == b.weights.rows() && a.weights.cols() == b.weights.cols() &&
           a.bias.size() == b.bias.size() && a.weights == b.weights && a.bias == b.bias;
  }
};

/// Gradients share the parameter layout.
using PolicyGradient = PolicyParams;

/// softmax(weights * x + bias). Throws NumericError on non-finite logits.
Eigen::VectorXd next_token_dist(const PolicyParams& params, const ContextFeatures& ctx);
/// Numerically stable log-softmax.
Eigen::VectorXd next_token_log_dist(const PolicyParams& params, const ContextFeatures& ctx);
double log_prob(const PolicyParams& params, const ContextFeatures& ctx, TokenId token);

/// KL(pi_ref || pi_theta) between the two next-token distributions.
double kl_next_token(const PolicyParams& ref, const PolicyParams& theta, const ContextFeatures& ctx);

/// d log pi(token | ctx) / d params; row a is (1[a = token] - p_a) * [features, 1].
PolicyGradient grad_log_prob(const PolicyParams& params, const ContextFeatures& ctx, TokenId token);

struct SampledToken {
  TokenId token;
  double log_prob;
};

struct SampledResponse {
  std::vector<SampledToken> tokens;
  /// contexts[t] is the state in which tokens[t] was drawn.
  std::vector<ContextFeatures> contexts;
};

/// Autoregressive categorical sampling; stops after max_len tokens or once the
/// end token is drawn (the end token is kept). Deterministic under `seed`.
SampledResponse sample_response(const PolicyParams& params, const ContextBuilder& builder, std::string_view image_id,
                                std::span<const TokenId> prompt, std::size_t max_len, std::uint64_t seed);

/// Binary checkpoint: "FSPO", u16 version, u32 |V|, u32 d_f, then row-major
/// little-endian f32 weights followed by the f32 bias.
void save_checkpoint(const PolicyParams& params, const std::filesystem::path& path);
PolicyParams load_checkpoint(const std::filesystem::path& path);

}  // namespace fisao
