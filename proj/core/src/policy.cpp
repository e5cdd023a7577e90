#include "fisao/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "binary_io.hpp"
#include "fisao/error.hpp"
#include "fisao/random.hpp"

namespace fisao {
namespace {

constexpr std::array<char, 4> kCheckpointMagic{'F', 'S', 'P', 'O'};
constexpr std::uint16_t kCheckpointVersion = 1;

Eigen::VectorXd logits(const PolicyParams& params, const ContextFeatures& ctx) {
  if (ctx.dim() != params.weights.cols()) {
    throw DimensionError("policy: context dim " + std::to_string(ctx.dim()) + " != weight columns " +
                         std::to_string(params.weights.cols()));
  }
  Eigen::VectorXd z = params.weights * ctx.values() + params.bias;
  if (!z.allFinite()) throw NumericError("policy: non-finite logits");
  return z;
}

void check_token(const PolicyParams& params, TokenId token) {
  if (token >= params.vocab_size()) {
    throw InputError("policy: token id " + std::to_string(token) + " out of range");
  }
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.empty()) throw InputError("vocabulary must be non-empty");
  for (TokenId i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw InputError("vocabulary: duplicate token '" + tokens_[i] + "'");
    }
  }
}

Vocabulary Vocabulary::with_end_token(std::vector<std::string> tokens) {
  if (std::find(tokens.begin(), tokens.end(), kEndToken) == tokens.end()) tokens.emplace_back(kEndToken);
  return Vocabulary(std::move(tokens));
}

std::optional<TokenId> Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write vocabulary '" + path.string() + "'");
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open vocabulary '" + path.string() + "'");
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

ContextFeatures::ContextFeatures(const Eigen::VectorXd& image_part, const Eigen::VectorXd& history_part,
                                 std::size_t window)
    : values_(image_part.size() + history_part.size()), image_dim_(image_part.size()), window_(window) {
  values_ << image_part, history_part;
}

ContextBuilder::ContextBuilder(const EmbeddingCache& cache, const Vocabulary& vocab, std::size_t window)
    : cache_(cache), vocab_(vocab), window_(window), embed_dim_(cache.dim().value_or(0)) {
  if (embed_dim_ == 0) throw InputError("context builder: embedding cache is empty");
  if (window_ == 0) throw ConfigError("context window must be >= 1");
  token_embeddings_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(embed_dim_), static_cast<Eigen::Index>(vocab.size()));
  for (TokenId id = 0; id < vocab.size(); ++id) {
    if (const auto* v = cache.find(EmbeddingKind::token, vocab.token(id))) {
      for (std::size_t d = 0; d < embed_dim_; ++d) token_embeddings_(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(id)) = (*v)[d];
    }
  }
}

ContextFeatures ContextBuilder::build(std::string_view image_id, std::span<const TokenId> history) const {
  const auto& img = cache_.image(image_id);
  Eigen::VectorXd image_part = Eigen::Map<const Eigen::VectorXd>(img.values().data(), static_cast<Eigen::Index>(img.dim()));
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(embed_dim_));
  const std::size_t n = std::min(window_, history.size());
  for (std::size_t i = history.size() - n; i < history.size(); ++i) {
    if (history[i] >= vocab_.size()) throw InputError("context builder: token id out of range");
    hist += token_embeddings_.col(static_cast<Eigen::Index>(history[i]));
  }
  if (n > 0) hist /= static_cast<double>(n);
  return ContextFeatures(image_part, hist, window_);
}

PolicyParams PolicyParams::zeros(std::size_t vocab_size, std::size_t feature_dim) {
  return PolicyParams{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vocab_size), static_cast<Eigen::Index>(feature_dim)),
                      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab_size))};
}

PolicyParams& PolicyParams::operator+=(const PolicyParams& other) {
  weights += other.weights;
  bias += other.bias;
  return *this;
}

PolicyParams& PolicyParams::operator*=(double s) {
  weights *= s;
  bias *= s;
  return *this;
}

double PolicyParams::squared_norm() const { return weights.squaredNorm() + bias.squaredNorm(); }

Eigen::VectorXd next_token_log_dist(const PolicyParams& params, const ContextFeatures& ctx) {
  Eigen::VectorXd z = logits(params, ctx);
  const double m = z.maxCoeff();
  const double lse = m + std::log((z.array() - m).exp().sum());
  return z.array() - lse;
}

Eigen::VectorXd next_token_dist(const PolicyParams& params, const ContextFeatures& ctx) {
  Eigen::VectorXd z = logits(params, ctx);
  Eigen::VectorXd p = (z.array() - z.maxCoeff()).exp();
  return p / p.sum();
}

double log_prob(const PolicyParams& params, const ContextFeatures& ctx, TokenId token) {
  check_token(params, token);
  return next_token_log_dist(params, ctx)(static_cast<Eigen::Index>(token));
}

double kl_next_token(const PolicyParams& ref, const PolicyParams& theta, const ContextFeatures& ctx) {
  const Eigen::VectorXd log_ref = next_token_log_dist(ref, ctx);
  const Eigen::VectorXd log_theta = next_token_log_dist(theta, ctx);
  const double kl = (log_ref.array().exp() * (log_ref - log_theta).array()).sum();
  // Rounding can leave a tiny negative value for identical distributions.
  return std::max(kl, 0.0);
}

PolicyGradient grad_log_prob(const PolicyParams& params, const ContextFeatures& ctx, TokenId token) {
  check_token(params, token);
  Eigen::VectorXd coeff = -next_token_dist(params, ctx);
  coeff(static_cast<Eigen::Index>(token)) += 1.0;
  return PolicyGradient{coeff * ctx.values().transpose(), coeff};
}

SampledResponse sample_response(const PolicyParams& params, const ContextBuilder& builder, std::string_view image_id,
                                std::span<const TokenId> prompt, std::size_t max_len, std::uint64_t seed) {
  if (max_len == 0) throw ConfigError("sample_response: max_len must be >= 1");
  Rng rng(seed);
  const auto end = builder.vocabulary().end_id();
  std::vector<TokenId> history(prompt.begin(), prompt.end());
  SampledResponse out;
  for (std::size_t step = 0; step < max_len; ++step) {
    ContextFeatures ctx = builder.build(image_id, history);
    const Eigen::VectorXd logp = next_token_log_dist(params, ctx);
    // Inverse-CDF draw; falls back to the last token if rounding leaves u past the total.
    const double u = uniform01(rng);
    double cumulative = 0.0;
    TokenId pick = static_cast<TokenId>(logp.size() - 1);
    for (Eigen::Index a = 0; a < logp.size(); ++a) {
      cumulative += std::exp(logp(a));
      if (u < cumulative) {
        pick = static_cast<TokenId>(a);
        break;
      }
    }
    out.tokens.push_back({pick, logp(static_cast<Eigen::Index>(pick))});
    out.contexts.push_back(std::move(ctx));
    history.push_back(pick);
    if (end && pick == *end) break;
  }
  return out;
}

void save_checkpoint(const PolicyParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write checkpoint '" + path.string() + "'");
  out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  detail::write_le<std::uint16_t>(out, kCheckpointVersion);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.vocab_size()));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.feature_dim()));
  for (Eigen::Index r = 0; r < params.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < params.weights.cols(); ++c) detail::write_f32(out, params.weights(r, c));
  }
  for (Eigen::Index r = 0; r < params.bias.size(); ++r) detail::write_f32(out, params.bias(r));
  if (!out) throw InputError("write failed for '" + path.string() + "'");
}

PolicyParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint '" + path.string() + "'");
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4 || magic != kCheckpointMagic) throw InputError(path.string() + ": bad checkpoint magic");
  const auto version = detail::read_le<std::uint16_t>(in, "checkpoint version");
  if (version != kCheckpointVersion) throw InputError(path.string() + ": unsupported checkpoint version");
  const auto vocab = detail::read_le<std::uint32_t>(in, "vocabulary size");
  const auto dim = detail::read_le<std::uint32_t>(in, "feature dim");
  auto params = PolicyParams::zeros(vocab, dim);
  for (Eigen::Index r = 0; r < params.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < params.weights.cols(); ++c) params.weights(r, c) = detail::read_f32(in, "weights");
  }
  for (Eigen::Index r = 0; r < params.bias.size(); ++r) params.bias(r) = detail::read_f32(in, "bias");
  if (!params.weights.allFinite() || !params.bias.allFinite()) {
    throw InputError(path.string() + ": checkpoint holds non-finite values");
  }
  return params;
}

}  // namespace fisao
