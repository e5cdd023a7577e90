#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fisao/analysis.hpp"
#include "fisao/error.hpp"
#include "fisao/svg.hpp"
#include "test_support.hpp"

using namespace fisao;

namespace {

std::vector<std::string> words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

double bleu_s(const std::string& cand, std::initializer_list<const char*> refs, std::size_t max_n = 4) {
  std::vector<std::vector<std::string>> r;
  for (const char* x : refs) r.push_back(words(x));
  return bleu(words(cand), r, max_n);
}

double rouge_s(const std::string& cand, const std::string& ref) { return rouge_l(words(cand), words(ref)); }

}  // namespace

TEST_CASE("BLEU worked examples") {
  // Frozen values from an independent implementation of the same definition.
  CHECK(std::abs(bleu_s("the cat sat on the mat", {"the cat is on the mat"}) - 0.42044820762685731) < 1e-9);
  CHECK(std::abs(bleu_s("a cat on a mat", {"there is a cat on the mat", "a cat is on the mat"}) -
                 0.37592003642100469) < 1e-9);
  CHECK(std::abs(bleu_s("the the the the", {"the cat"}, 2) - 0.25) < 1e-9);
  std::string long_cand;
  for (int i = 0; i < 20; ++i) long_cand += "w" + std::to_string(i) + " ";
  CHECK(std::abs(bleu_s(long_cand, {"x y z"}) - 0.051366639095059514) < 1e-9);
}

TEST_CASE("BLEU identity and errors") {
  for (const char* s : {"a", "a b", "the cat sat on the mat", "one two three four five six seven"}) {
    CHECK(bleu_s(s, {s}) == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK_THROWS_AS(bleu_s("", {"a"}), InputError);
  CHECK_THROWS_AS(bleu_s("a", {}), InputError);
  CHECK_THROWS_AS(bleu_s("a", {""}), InputError);
  CHECK_THROWS_AS(bleu_s("a", {"a"}, 0), InputError);
}

TEST_CASE("ROUGE-L worked examples") {
  CHECK(std::abs(rouge_s("a b c", "a c") - 0.82993197278911557) < 1e-9);
  CHECK(std::abs(rouge_s("the cat sat on the mat", "the cat is on the mat") - 0.83333333333333337) < 1e-9);
  CHECK(std::abs(rouge_s("police killed the gunman", "the gunman was shot by police") - 0.38607594936708861) < 1e-9);
  CHECK(rouge_s("a b c", "a b c") == 1.0);
  CHECK(rouge_s("a b", "c d") == 0.0);
  CHECK_THROWS_AS(rouge_s("", "a"), InputError);
  CHECK(lcs_length(words("a b c d"), words("b d a")) == 2);
}

TEST_CASE("summaries and median") {
  const std::vector<double> xs{1, 2, 3, 4};
  const auto s = summarize(xs);
  CHECK(s.count == 4);
  CHECK(s.mean == 2.5);
  CHECK(s.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(summarize(std::vector<double>{7}).stddev == 0.0);
  CHECK(median(xs) == 2.5);
  CHECK(median(std::vector<double>{3, 1, 2}) == 2.0);
  CHECK_THROWS_AS(median(std::vector<double>{}), InputError);
}

TEST_CASE("histograms") {
  const std::vector<std::vector<double>> series{{0, 0.5, 1, 1}, {0.25, 0.75}};
  const std::vector<std::string> names{"a", "b"};
  const auto h = histogram(series, names, 4);
  CHECK(h.bins() == 4);
  CHECK(h.bin_edges.front() == 0.0);
  CHECK(h.bin_edges.back() == 1.0);
  CHECK(h.counts[0] == std::vector<std::size_t>{1, 0, 1, 2});
  CHECK(h.counts[1] == std::vector<std::size_t>{0, 1, 0, 1});
  CHECK(h.summaries[1].mean == 0.5);

  const std::vector<std::vector<double>> constant{{2, 2, 2}};
  const std::vector<std::string> one{"c"};
  const auto c = histogram(constant, one, 5);
  std::size_t filled = 0;
  for (auto n : c.counts[0]) filled += n > 0 ? 1 : 0;
  CHECK(filled == 1);
  CHECK(c.bin_edges.front() < 2.0);
  CHECK(c.bin_edges.back() > 2.0);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1);
  std::vector<std::vector<double>> big(1);
  for (int i = 0; i < 1000; ++i) big[0].push_back(n(rng));
  const auto b = histogram(big, one, 17);
  std::size_t total = 0;
  for (auto k : b.counts[0]) total += k;
  CHECK(total == 1000);

  std::ostringstream csv;
  h.write_csv(csv);
  CHECK(csv.str().rfind("bin_lo,bin_hi,a,b\n", 0) == 0);

  const std::vector<std::vector<double>> empty{{}};
  CHECK_THROWS_AS(histogram(empty, one, 3), InputError);
  CHECK_THROWS_AS(histogram(series, names, 0), InputError);
  const std::vector<std::vector<double>> bad{{NAN}};
  CHECK_THROWS_AS(histogram(bad, one, 3), InputError);
}

TEST_CASE("standardized gap") {
  std::vector<LabeledScore> s{{1.0, ScoreLabel::gt, Granularity::token},
                              {3.0, ScoreLabel::gt, Granularity::token},
                              {0.0, ScoreLabel::hal, Granularity::token},
                              {2.0, ScoreLabel::hal, Granularity::token},
                              {5.0, ScoreLabel::gt, Granularity::sentence}};
  // Means 2 and 1, both variances 2.
  CHECK(standardized_gap(s, Granularity::token) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK_THROWS_AS(standardized_gap(s, Granularity::sentence), InputError);
  const auto h = histogram(s, 4);
  CHECK(h.series == std::vector<std::string>{"gt", "hal"});
}

TEST_CASE("Pearson correlation") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{2, 4, 6, 8, 10};
  std::vector<double> neg(y.rbegin(), y.rend());
  CHECK(pearson(x, y) == 1.0);
  CHECK(pearson(x, neg) == -1.0);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> a, b, a2;
  for (int i = 0; i < 10000; ++i) {
    a.push_back(n(rng));
    b.push_back(n(rng));
    a2.push_back(3.5 * a.back() - 7.0);
  }
  CHECK(std::abs(pearson(a, b)) < 0.05);
  CHECK(pearson(a2, b) == doctest::Approx(pearson(a, b)).epsilon(1e-10));
  CHECK_THROWS_AS(pearson(std::vector<double>{1, 2}, std::vector<double>{1}), InputError);
  CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{1}), InputError);
  CHECK_THROWS_AS(pearson(std::vector<double>{1, 1}, std::vector<double>{1, 2}), NumericError);

  const auto fit = ols_fit(x, y);
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(0.0));
}

TEST_CASE("CHAIR examples") {
  const auto set = EntitySet::build(std::vector<std::string>{"cat", "dog", "person"}, {});
  std::vector<CaptionRecord> clean{make_caption_record("i", words("a cat and a dog"), {"cat", "dog"}, set)};
  auto r = chair(clean);
  CHECK(r.chair_s == 0.0);
  CHECK(r.chair_i == 0.0);

  std::vector<CaptionRecord> mixed{make_caption_record("i", words("two cats and a dog"), {"cat"}, set),
                                   make_caption_record("j", words("people"), {"person"}, set)};
  CHECK(mixed[0].mentioned_objects == std::vector<std::string>{"cat", "dog"});
  r = chair(mixed);
  CHECK(r.chair_s == 0.5);
  CHECK(r.chair_i == doctest::Approx(1.0 / 3.0));

  // Repeated mentions count once per caption.
  std::vector<CaptionRecord> rep{make_caption_record("i", words("dog dog dogs"), {"cat"}, set)};
  CHECK(chair(rep).mentions == 1);

  std::vector<CaptionRecord> none{make_caption_record("i", words("nothing here"), {"cat"}, set)};
  CHECK_FALSE(chair(none).chair_i.has_value());
  CHECK_THROWS_AS(chair(std::vector<CaptionRecord>{}), InputError);
}

TEST_CASE("CHAIR matches a brute-force recount") {
  const std::vector<std::string> objects{"cat", "dog", "person", "car", "tree", "bus"};
  const std::vector<std::string> fillers{"a", "the", "on", "with", "near"};
  const auto set = EntitySet::build(objects, {});
  std::mt19937_64 rng(17);
  for (int corpus = 0; corpus < 50; ++corpus) {
    std::vector<CaptionRecord> recs;
    const int n = 1 + static_cast<int>(rng() % 12);
    for (int c = 0; c < n; ++c) {
      std::vector<std::string> toks;
      const int len = 1 + static_cast<int>(rng() % 10);
      for (int k = 0; k < len; ++k) {
        toks.push_back(rng() % 2 ? objects[rng() % objects.size()] : fillers[rng() % fillers.size()]);
      }
      std::set<std::string> gt;
      for (const auto& o : objects) {
        if (rng() % 2) gt.insert(o);
      }
      recs.push_back(make_caption_record("img" + std::to_string(c), toks, gt, set));
    }

    std::size_t bad_caps = 0, mentions = 0, bad_mentions = 0;
    for (const auto& rec : recs) {
      std::set<std::string> seen;
      for (const auto& t : rec.tokens) {
        if (std::find(objects.begin(), objects.end(), t) != objects.end()) seen.insert(t);
      }
      std::size_t bad = 0;
      for (const auto& o : seen) bad += rec.gt_objects.count(o) ? 0 : 1;
      mentions += seen.size();
      bad_mentions += bad;
      bad_caps += bad > 0 ? 1 : 0;
    }
    const auto r = chair(recs);
    CHECK(r.captions == recs.size());
    CHECK(r.hallucinated_captions == bad_caps);
    CHECK(r.mentions == mentions);
    CHECK(r.hallucinated_mentions == bad_mentions);
    CHECK(r.chair_s == static_cast<double>(bad_caps) / static_cast<double>(recs.size()));
    if (mentions > 0) {
      CHECK(*r.chair_i == static_cast<double>(bad_mentions) / static_cast<double>(mentions));
    } else {
      CHECK_FALSE(r.chair_i.has_value());
    }
  }
}

TEST_CASE("caption and score files") {
  const auto set = EntitySet::build(std::vector<std::string>{"cat"}, {});
  test::TempDir dir;
  auto rec = make_caption_record("img1", words("a cat"), {"cat"}, set);
  rec.references = {words("the cat")};
  rec.score = 0.25;
  save_caption_records(std::vector<CaptionRecord>{rec}, dir / "c.jsonl");
  const auto back = load_caption_records(dir / "c.jsonl");
  REQUIRE(back.size() == 1);
  CHECK(back[0].tokens == rec.tokens);
  CHECK(back[0].mentioned_objects == rec.mentioned_objects);
  CHECK(back[0].references == rec.references);
  CHECK(back[0].score == 0.25);

  const auto raw = dir.write("raw.jsonl", "{\"tokens\":[\"cats\"],\"gt_objects\":[]}\n");
  CHECK_THROWS_AS(load_caption_records(raw), InputError);
  CHECK(load_caption_records(raw, &set)[0].mentioned_objects == std::vector<std::string>{"cat"});
  CHECK_THROWS_AS(load_caption_records(dir.write("bad.jsonl", "{oops\n")), InputError);

  const std::vector<LabeledScore> s{{0.5, ScoreLabel::hal, Granularity::sentence}};
  save_labeled_scores(s, dir / "s.jsonl");
  const auto sb = load_labeled_scores(dir / "s.jsonl");
  REQUIRE(sb.size() == 1);
  CHECK(sb[0].value == 0.5);
  CHECK(sb[0].label == ScoreLabel::hal);
  CHECK(sb[0].granularity == Granularity::sentence);
  const auto dflt = load_labeled_scores(dir.write("d.jsonl", "{\"score\":1,\"label\":\"gt\"}\n"));
  CHECK(dflt[0].granularity == Granularity::token);
}

TEST_CASE("reward shift report") {
  const std::vector<double> a{0.1, 0.4, 0.2, 0.9};
  const auto same = reward_shift_report(a, a);
  CHECK(same.mean_shift == 0.0);
  CHECK(same.standardized_shift == 0.0);
  std::vector<double> b;
  for (double x : a) b.push_back(x + 0.3);
  const auto moved = reward_shift_report(a, b, 8);
  CHECK(moved.mean_shift == doctest::Approx(0.3));
  CHECK(moved.median_after - moved.median_before == doctest::Approx(0.3));
  CHECK(moved.overlay.series == std::vector<std::string>{"before", "after"});
  CHECK(moved.overlay.bins() == 8);
  CHECK_THROWS_AS(reward_shift_report(a, std::vector<double>{}), InputError);
}

TEST_CASE("SVG output is well formed") {
  const std::vector<std::vector<double>> series{{0, 1, 2}, {1, 2, 3}};
  const std::vector<std::string> names{"gt", "hal"};
  const auto h = histogram(series, names, 5);
  const auto svg1 = svg::histogram_svg(h, {"scores", "score", "count"});
  CHECK(svg1.rfind("<svg", 0) == 0);
  CHECK(svg1.find("</svg>") != std::string::npos);
  CHECK(svg1.find("hal") != std::string::npos);

  const std::vector<double> x{0, 1, 2}, y{1, 3, 5};
  const auto svg2 = svg::scatter_svg(x, y, ols_fit(x, y), {"fit", "x", "y"});
  std::size_t circles = 0;
  for (auto pos = svg2.find("<circle"); pos != std::string::npos; pos = svg2.find("<circle", pos + 1)) ++circles;
  CHECK(circles == 3);
}
