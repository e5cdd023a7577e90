#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fisao/error.hpp"
#include "fisao/log.hpp"
#include "fisao/reward_core.hpp"
#include "test_support.hpp"

using namespace fisao;

namespace {

// One image e_0 in 2-d; each token's score is its first coordinate.
EmbeddingCache scored_tokens(const std::vector<std::pair<std::string, double>>& tokens) {
  EmbeddingCache c;
  c.insert({"img", EmbeddingKind::image, EmbeddingVector({1.0, 0.0})});
  for (const auto& [id, s] : tokens) c.insert({id, EmbeddingKind::token, EmbeddingVector({s, 0.5})});
  return c;
}

BaselineStats stats(double mu_gt, double mu_hal, double s_min, double s_max) {
  return {mu_gt, mu_hal, s_min, s_max, 10, 10};
}

const EntitySet& cats() {
  static const auto set = EntitySet::build(std::vector<std::string>{"cat", "dog"}, {});
  return set;
}

}  // namespace

TEST_CASE("baselines pool over all labelled positions") {
  const auto cache = scored_tokens({{"cat", 0.2}, {"dog", 0.4}, {"bird", -0.1}, {"the", 9.0}});
  std::vector<AnnotatedResponse> corpus{
      {"img", {"the", "cat", "dog"}, {1}, {}},
      {"img", {"dog", "bird"}, {0}, {1}},
  };
  const auto s = estimate_baselines(corpus, cache);
  CHECK(s.mu_gt == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(s.mu_hal == -0.1);
  CHECK(s.s_min == -0.1);
  CHECK(s.s_max == 0.4);
  CHECK(s.n_gt == 2);
  CHECK(s.n_hal == 1);
}

TEST_CASE("pooling weights responses by their object counts") {
  const auto cache = scored_tokens({{"a", 1.0}, {"b", 0.0}, {"h", -1.0}});
  // Mean of per-response means would be 0.5; the pooled mean is 2/3.
  std::vector<AnnotatedResponse> corpus{{"img", {"a", "a", "h"}, {0, 1}, {2}}, {"img", {"b", "h"}, {0}, {1}}};
  const auto s = estimate_baselines(corpus, cache);
  CHECK(s.mu_gt == 2.0 / 3.0);
}

TEST_CASE("degenerate baselines warn but succeed") {
  std::vector<std::string> warnings;
  fisao::log::ScopedWarningSink sink([&](std::string_view m) { warnings.emplace_back(m); });
  const auto cache = scored_tokens({{"a", 0.5}, {"b", 0.5}});
  std::vector<AnnotatedResponse> corpus{{"img", {"a", "b"}, {0}, {1}}};
  const auto s = estimate_baselines(corpus, cache);
  CHECK(s.mu_gt == 0.5);
  CHECK(s.mu_hal == 0.5);
  CHECK(warnings.size() == 1);
}

TEST_CASE("baseline errors") {
  const auto cache = scored_tokens({{"a", 0.5}});
  std::vector<AnnotatedResponse> no_hal{{"img", {"a"}, {0}, {}}};
  CHECK_THROWS_AS(estimate_baselines(no_hal, cache), InputError);
  std::vector<AnnotatedResponse> missing{{"img", {"a", "zzz"}, {0}, {1}}};
  CHECK_THROWS_AS(estimate_baselines(missing, cache), InputError);
  std::vector<AnnotatedResponse> overlap{{"img", {"a", "a"}, {0, 1}, {1}}};
  CHECK_THROWS_AS(estimate_baselines(overlap, cache), InputError);
  std::vector<AnnotatedResponse> out_of_range{{"img", {"a"}, {0}, {4}}};
  CHECK_THROWS_AS(estimate_baselines(out_of_range, cache), InputError);
}

TEST_CASE("baselines match a brute-force recount on dyadic scores") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<std::string, double>> toks;
    for (int i = 0; i < 12; ++i) {
      toks.emplace_back("t" + std::to_string(i), static_cast<double>(static_cast<int>(rng() % 257) - 128) / 64.0);
    }
    const auto cache = scored_tokens(toks);
    std::vector<AnnotatedResponse> corpus;
    for (int r = 0; r < 6; ++r) {
      AnnotatedResponse resp{"img", {}, {}, {}};
      for (std::size_t p = 0; p < 8; ++p) {
        resp.tokens.push_back(toks[rng() % toks.size()].first);
        const auto u = rng() % 3;
        if (u == 0) resp.gt_positions.insert(p);
        if (u == 1) resp.hal_positions.insert(p);
      }
      corpus.push_back(resp);
    }
    corpus[0].hal_positions.erase(0);
    corpus[0].gt_positions.insert(0);
    corpus[0].gt_positions.erase(1);
    corpus[0].hal_positions.insert(1);

    // Sums of dyadic values are exact, so order does not matter here.
    double gt = 0, hal = 0, lo = INFINITY, hi = -INFINITY;
    std::size_t ng = 0, nh = 0;
    for (auto it = corpus.rbegin(); it != corpus.rend(); ++it) {
      for (std::size_t p = 0; p < it->tokens.size(); ++p) {
        const double s = cache.token(it->tokens[p])[0];
        const bool is_gt = it->gt_positions.count(p) > 0;
        const bool is_hal = it->hal_positions.count(p) > 0;
        if (!is_gt && !is_hal) continue;
        (is_gt ? gt : hal) += s;
        ++(is_gt ? ng : nh);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
      }
    }
    fisao::log::ScopedWarningSink quiet([](std::string_view) {});
    const auto s = estimate_baselines(corpus, cache);
    CHECK(s.mu_gt == gt / static_cast<double>(ng));
    CHECK(s.mu_hal == hal / static_cast<double>(nh));
    CHECK(s.s_min == lo);
    CHECK(s.s_max == hi);
  }
}

TEST_CASE("normalization worked examples") {
  CHECK(normalize_positive(0.65, stats(0.3, 0.0, -1.0, 0.9), 0.1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(normalize_positive(0.9, stats(0.3, 0.0, -1.0, 0.9), 0.1) == 1.0);
  CHECK(normalize_positive(0.4 + 1e-12, stats(0.3, 0.0, -1.0, 0.9), 0.1) < 1e-10);
  CHECK(normalize_negative(-0.25, stats(0.5, 0.1, -0.5, 1.0), 0.1, HalDenominator::as_intended) ==
        doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(normalize_negative(-0.5, stats(0.5, 0.1, -0.5, 1.0), 0.1, HalDenominator::as_intended) == -1.0);
  CHECK(normalize_negative(-1e-12, stats(0.5, 0.1, -0.5, 1.0), 0.1, HalDenominator::as_intended) > -1e-10);
  // Printed denominator: (mu_gt - margin) - s_min = 0.4 + 0.5.
  CHECK(normalize_negative(-0.45, stats(0.5, 0.1, -0.5, 1.0), 0.1, HalDenominator::as_printed) ==
        doctest::Approx(-0.5).epsilon(1e-14));

  CHECK_THROWS_AS(normalize_positive(1.0, stats(0.3, 0.0, -1.0, 0.4), 0.1), ConfigError);
  CHECK_THROWS_AS(normalize_negative(-1.0, stats(0.5, 0.1, 0.0, 1.0), 0.1, HalDenominator::as_intended),
                  ConfigError);
  CHECK_THROWS_AS(normalize_positive(0.3, stats(0.3, 0.0, -1.0, 0.9), 0.1), InputError);
}

TEST_CASE("token_reward branches") {
  const auto st = stats(0.6, 0.2, -0.4, 1.0);
  const RewardConfig cfg{0.1, 0.2, HalDenominator::as_intended};

  const auto the = token_reward("the", 5.0, 0.3, cats(), st, cfg);
  CHECK(the.branch == RewardBranch::non_entity);
  CHECK(the.reward == 0.0);

  for (double s : {0.1, 0.3, 0.5, 0.7}) {
    const auto r = token_reward("cat", s, 0.7, cats(), st, cfg);
    CHECK(r.branch == RewardBranch::dead_zone);
    CHECK(r.reward == 0.0);
    CHECK(r.normalized == 0.0);
  }

  const auto top = token_reward("cat", 1.0, 0.0, cats(), st, cfg);
  CHECK(top.branch == RewardBranch::positive);
  CHECK(top.reward == 1.0);
  const auto above = token_reward("Cats", 3.0, 0.5, cats(), st, cfg);
  CHECK(above.normalized == 1.0);
  CHECK(above.reward == doctest::Approx(1.0 - 0.1));

  const auto bottom = token_reward("dog", -0.4, 0.0, cats(), st, cfg);
  CHECK(bottom.branch == RewardBranch::negative);
  CHECK(bottom.reward == -1.0);
  CHECK(token_reward("dog", -7.0, 0.0, cats(), st, cfg).normalized == -1.0);

  CHECK_THROWS_AS(token_reward("dog", 0.0, -0.1, cats(), st, cfg), InputError);
}

TEST_CASE("rewards are bounded and monotone in the score, and fall with slope -kl_scale") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 2000; ++trial) {
    double a = u(rng), b = u(rng);
    const double s_min = std::min(a, b) - 0.5;
    const double s_max = std::max(a, b) + 0.5;
    const double mu_hal = std::min(a, b);
    const double mu_gt = std::max(a, b);
    const double margin = std::uniform_real_distribution<double>(0.0, 0.45)(rng);
    const auto st = stats(mu_gt, mu_hal, s_min, s_max);
    for (auto variant : {HalDenominator::as_intended, HalDenominator::as_printed}) {
      const RewardConfig cfg{margin, 0.2, variant};
      const double s1 = u(rng) * 2, s2 = u(rng) * 2;
      const auto r1 = token_reward("cat", std::min(s1, s2), 0.0, cats(), st, cfg);
      const auto r2 = token_reward("cat", std::max(s1, s2), 0.0, cats(), st, cfg);
      CHECK(r1.normalized >= -1.0);
      CHECK(r2.normalized <= 1.0);
      CHECK(r1.reward <= r2.reward);
      if (r1.branch != RewardBranch::dead_zone) {
        const double kl = 0.37;
        CHECK(token_reward("cat", std::min(s1, s2), kl, cats(), st, cfg).reward ==
              doctest::Approx(r1.reward - 0.2 * kl).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("a margin wide enough to cover all scores silences every token") {
  const auto st = stats(0.6, 0.2, -0.4, 1.0);
  const RewardConfig cfg{10.0, 0.2, HalDenominator::as_intended};
  for (double s = -0.4; s <= 1.0; s += 0.05) CHECK(token_reward("cat", s, 1.0, cats(), st, cfg).reward == 0.0);
}

TEST_CASE("trajectory rewards apply the token rule position by position") {
  const auto cache = scored_tokens({{"a", 0.0}, {"cat", 1.0}, {"dog", 0.4}});
  const auto st = stats(0.6, 0.2, -0.4, 1.0);
  const RewardConfig cfg{0.1, 0.2, HalDenominator::as_intended};
  const std::vector<std::string> toks{"a", "cat", "dog", "unknown"};
  const std::vector<double> kl{0.0, 0.0, 0.0, 0.0};
  const auto rs = trajectory_rewards(toks, "img", cache, cats(), st, cfg, kl);
  REQUIRE(rs.size() == 4);
  CHECK(rs[0].branch == RewardBranch::non_entity);
  CHECK(rs[0].score == 0.0);
  CHECK(rs[1].reward == 1.0);
  CHECK(rs[2].branch == RewardBranch::dead_zone);
  CHECK(std::isnan(rs[3].score));
  for (std::size_t i = 0; i < rs.size(); ++i) CHECK(rs[i].position == i);

  const std::vector<std::string> plain{"a", "a"};
  for (const auto& r : trajectory_rewards(plain, "img", cache, cats(), st, cfg, std::vector<double>{0.1, 0.2})) {
    CHECK(r.reward == 0.0);
  }
  CHECK_THROWS_AS(trajectory_rewards(toks, "img", cache, cats(), st, cfg, std::vector<double>{0.0}), InputError);
  const std::vector<std::string> missing{"dogs"};
  CHECK_THROWS_AS(trajectory_rewards(missing, "img", cache, cats(), st, cfg, std::vector<double>{0.0}), InputError);
}

TEST_CASE("serialization") {
  test::TempDir dir;
  const BaselineStats s{0.25, -0.5, -1.0, 2.0, 7, 3};
  save_baselines(s, dir / "b.json");
  CHECK(load_baselines(dir / "b.json") == s);
  CHECK_THROWS_AS(load_baselines(dir.write("bad.json", "{\"mu_gt\": 1}")), InputError);

  std::vector<AnnotatedResponse> corpus{{"img", {"a", "cat"}, {1}, {}}, {"img", {"dog"}, {}, {0}}};
  save_corpus(corpus, dir / "c.jsonl");
  const auto back = load_corpus(dir / "c.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[0].tokens == corpus[0].tokens);
  CHECK(back[1].hal_positions == corpus[1].hal_positions);

  std::istringstream bad(R"({"image_id":"img","tokens":["a"],"gt_positions":[3],"hal_positions":[]})");
  CHECK_THROWS_AS(read_corpus_jsonl(bad), InputError);

  CHECK(parse_hal_denominator("as_printed") == HalDenominator::as_printed);
  CHECK_THROWS_AS(parse_hal_denominator("other"), ConfigError);
  CHECK_THROWS_AS((RewardConfig{-1.0, 0.2, HalDenominator::as_intended}.validate()), ConfigError);
}
