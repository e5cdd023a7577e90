#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "fisao/planted.hpp"
#include "fisao/theory_lab.hpp"

using namespace fisao;

namespace {

struct Env {
  SynthResult synth = synth_cache({});
  Vocabulary vocab = planted_vocabulary(synth);
  ContextBuilder builder{synth.cache, vocab, 4};
  EntitySet entities = planted_entities(synth);
  std::vector<AnnotatedResponse> corpus = planted_corpus(synth, {});
  BaselineStats stats = estimate_baselines(corpus, synth.cache);
};

const Env& env() {
  static const Env e;
  return e;
}

void BM_ScoreToken(benchmark::State& state) {
  const auto& e = env();
  const auto& img = e.synth.cache.image(e.synth.image_ids.front());
  const auto& tok = e.synth.cache.token(e.synth.entity_tokens.front());
  for (auto _ : state) benchmark::DoNotOptimize(score_token(tok, img));
}
BENCHMARK(BM_ScoreToken);

void BM_TokenReward(benchmark::State& state) {
  const auto& e = env();
  const RewardConfig cfg{0.02, 0.2, HalDenominator::as_intended};
  const auto& token = e.synth.entity_tokens.front();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> s(e.stats.s_min, e.stats.s_max);
  std::vector<double> scores(1024);
  for (auto& v : scores) v = s(rng);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(token_reward(token, scores[i++ & 1023], 0.01, e.entities, e.stats, cfg));
  }
}
BENCHMARK(BM_TokenReward);

void BM_NextTokenDist(benchmark::State& state) {
  const auto& e = env();
  auto p = PolicyParams::zeros(e.vocab.size(), e.builder.feature_dim());
  p.bias.setLinSpaced(-1.0, 1.0);
  const std::vector<TokenId> hist{*e.vocab.id("describe"), *e.vocab.id("the"), *e.vocab.id("image")};
  const auto ctx = e.builder.build(e.synth.image_ids.front(), hist);
  for (auto _ : state) benchmark::DoNotOptimize(next_token_dist(p, ctx));
}
BENCHMARK(BM_NextTokenDist);

void BM_TrainEpoch(benchmark::State& state) {
  const auto& e = env();
  const auto data = planted_dataset(e.synth, e.vocab);
  const RewardContext deps{e.synth.cache, e.vocab, e.entities, e.stats, {0.02, 0.2, HalDenominator::as_intended}};
  const auto init = PolicyParams::zeros(e.vocab.size(), e.builder.feature_dim());
  PPOConfig cfg;
  cfg.dataset_passes = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(data, init, deps, cfg).params.bias[0]);
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

void BM_Regression(benchmark::State& state) {
  theory::TheoryConfig cfg;
  cfg.n_samples = static_cast<std::size_t>(state.range(0));
  const auto m = theory::make_model(cfg);
  const auto b = theory::draw_samples(cfg, m, cfg.n_samples, 3);
  const auto ys = theory::optimal_responses(b, 1.0, m);
  const Eigen::VectorXd zs = (m.beta_star.transpose() * theory::ground_truths(b, m, cfg.kappa)).transpose();
  for (auto _ : state) benchmark::DoNotOptimize(theory::fit_regression(ys, zs).loss);
}
BENCHMARK(BM_Regression)->Arg(10000)->Arg(100000)->Unit(benchmark::kMicrosecond);

void BM_VerifyTheorem(benchmark::State& state) {
  theory::TheoryConfig cfg;
  cfg.n_samples = 20000;
  for (auto _ : state) benchmark::DoNotOptimize(theory::verify_theorem(cfg).pass);
}
BENCHMARK(BM_VerifyTheorem)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
