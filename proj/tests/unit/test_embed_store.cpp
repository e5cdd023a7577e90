#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fisao/embed_store.hpp"
#include "fisao/error.hpp"
#include "test_support.hpp"

using namespace fisao;

namespace {

EmbeddingVector vec(std::vector<double> v) { return EmbeddingVector(std::move(v)); }

EmbeddingCache small_cache() {
  EmbeddingCache c;
  c.insert({"img0", EmbeddingKind::image, vec({1.0, 0.0, 0.5, -0.25})});
  c.insert({"cat", EmbeddingKind::token, vec({0.125, 2.0, -1.5, 3.0})});
  c.insert({"a cat", EmbeddingKind::sentence, vec({0.0, 1.0, 0.0, 1.0})});
  return c;
}

}  // namespace

TEST_CASE("embedding vectors reject empty and non-finite values") {
  CHECK_THROWS_AS(vec({}), DimensionError);
  CHECK_THROWS_AS(vec({1.0, NAN}), NumericError);
  CHECK_THROWS_AS(vec({INFINITY}), NumericError);
  CHECK(vec({3.0, 4.0}).norm() == doctest::Approx(5.0));
}

TEST_CASE("score_token worked examples") {
  CHECK(score_token(vec({1, 0}), vec({1, 0})) == 1.0);
  CHECK(score_token(vec({1, 0}), vec({0, 1})) == 0.0);
  CHECK(score_token(vec({0.5, 2.0}), vec({2.0, 0.25})) == 1.5);
  CHECK_THROWS_AS(score_token(vec({1, 0}), vec({1, 0, 0})), DimensionError);
}

TEST_CASE("score_token is symmetric and scales linearly") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(8), y(8);
    for (auto& v : x) v = n(rng);
    for (auto& v : y) v = n(rng);
    const double a = n(rng);
    std::vector<double> ax = x;
    for (auto& v : ax) v *= a;
    const double s = score_token(vec(x), vec(y));
    CHECK(score_token(vec(y), vec(x)) == s);
    CHECK(score_token(vec(ax), vec(y)) == doctest::Approx(a * s).epsilon(1e-12));
  }
}

TEST_CASE("score_sentence is the score of the mean-pooled tokens") {
  const auto img = vec({1, 0});
  const std::vector<EmbeddingVector> two{vec({1, 0}), vec({0, 1})};
  CHECK(score_sentence(two, img) == 0.5);

  const auto tok = vec({0.3, -0.7});
  const std::vector<EmbeddingVector> one{tok};
  CHECK(score_sentence(one, img) == score_token(tok, img));
  const std::vector<EmbeddingVector> same{tok, tok};
  CHECK(score_sentence(same, img) == doctest::Approx(score_token(tok, img)).epsilon(1e-15));

  CHECK_THROWS_AS(score_sentence(std::vector<EmbeddingVector>{}, img), InputError);
  CHECK_THROWS_AS(score_sentence(std::vector<EmbeddingVector>{vec({1, 2, 3})}, img), DimensionError);
}

TEST_CASE("cache enforces dimension and per-kind unique ids") {
  EmbeddingCache c;
  CHECK_FALSE(c.dim().has_value());
  c.insert({"x", EmbeddingKind::token, vec({1, 2, 3, 4})});
  CHECK(c.dim() == 4u);
  CHECK_THROWS_AS(c.insert({"y", EmbeddingKind::token, vec({1, 2, 3, 4, 5})}), DimensionError);
  CHECK_THROWS_AS(c.insert({"x", EmbeddingKind::token, vec({0, 0, 0, 0})}), InputError);
  // The same surface may be both a token and a sentence.
  c.insert({"x", EmbeddingKind::sentence, vec({0, 0, 0, 1})});
  CHECK(c.size() == 2);
  CHECK_THROWS_AS(c.image("nope"), InputError);
  CHECK(c.find(EmbeddingKind::image, "x") == nullptr);
}

TEST_CASE("JSONL loading") {
  SUBCASE("two records of dim 4") {
    std::istringstream in(R"({"id":"img0","kind":"image","values":[1,0,0,0]}
{"id":"cat","kind":"token","values":[0.5,0.5,0,0]}
)");
    const auto c = read_cache_jsonl(in);
    CHECK(c.dim() == 4u);
    CHECK(c.size() == 2);
    CHECK(c.count(EmbeddingKind::image) == 1);
    CHECK(score_token(c.token("cat"), c.image("img0")) == 0.5);
  }
  SUBCASE("mixed dimensions name the offending record") {
    std::istringstream in(R"({"id":"a","kind":"token","values":[1,0,0,0]}
{"id":"b","kind":"token","values":[1,0,0,0,0]}
)");
    try {
      (void)read_cache_jsonl(in);
      FAIL("expected a dimension error");
    } catch (const DimensionError& e) {
      CHECK(std::string(e.what()).find("'b'") != std::string::npos);
    }
  }
  SUBCASE("empty input gives an empty cache") {
    std::istringstream in("");
    const auto c = read_cache_jsonl(in);
    CHECK(c.empty());
    CHECK_FALSE(c.dim().has_value());
  }
  SUBCASE("malformed records") {
    for (const char* text : {"{not json}\n", R"({"id":"a","kind":"blob","values":[1]})", R"({"id":"","kind":"token","values":[1]})",
                             R"({"id":"a","kind":"token","values":[]})", R"({"id":"a","kind":"token"})",
                             "{\"id\":\"a\",\"kind\":\"token\",\"values\":[1]}\n{\"id\":\"a\",\"kind\":\"token\",\"values\":[2]}\n"}) {
      std::istringstream in(text);
      CHECK_THROWS_AS(read_cache_jsonl(in), InputError);
    }
  }
  SUBCASE("metadata line") {
    std::istringstream in(R"({"metadata":{"encoder":"clip","prompt_template":"a photo of a {}"}}
{"id":"a","kind":"token","values":[1,2]}
)");
    const auto c = read_cache_jsonl(in);
    CHECK(c.size() == 1);
    CHECK(c.metadata().at("prompt_template") == "a photo of a {}");
  }
}

TEST_CASE("normalization at ingestion is opt-in") {
  std::istringstream raw(R"({"id":"a","kind":"token","values":[3,4]})");
  CHECK(read_cache_jsonl(raw).token("a")[0] == 3.0);
  std::istringstream in(R"({"id":"a","kind":"token","values":[3,4]})");
  const auto c = read_cache_jsonl(in, {.normalize = true});
  CHECK(c.token("a")[0] == doctest::Approx(0.6));
  CHECK(c.token("a").norm() == doctest::Approx(1.0));
  std::istringstream zero(R"({"id":"a","kind":"token","values":[0,0]})");
  CHECK_THROWS_AS(read_cache_jsonl(zero, {.normalize = true}), InputError);
}

TEST_CASE("round trips") {
  test::TempDir dir;
  const auto c = small_cache();

  SUBCASE("jsonl") {
    save_cache(c, dir / "c.jsonl", CacheFormat::jsonl);
    CHECK(load_cache(dir / "c.jsonl") == c);
  }
  SUBCASE("binary is bit-exact for float-representable values") {
    save_cache(c, dir / "c.bin", CacheFormat::binary);
    const auto back = load_cache(dir / "c.bin");
    CHECK(back == c);
    save_cache(back, dir / "c2.bin", CacheFormat::binary);
    CHECK(test::read_file(dir / "c.bin") == test::read_file(dir / "c2.bin"));
  }
  SUBCASE("binary layout") {
    save_cache(c, dir / "c.fsao", CacheFormat::binary);
    const auto bytes = test::read_file(dir / "c.fsao");
    CHECK(bytes.substr(0, 4) == "FSAO");
    CHECK(static_cast<unsigned char>(bytes[4]) == 1);  // version, little-endian
    CHECK(static_cast<unsigned char>(bytes[6]) == 4);  // dim
    CHECK(static_cast<unsigned char>(bytes[10]) == 3);  // record count
    // header 18 bytes; each record: kind 1 + id length 2 + id + 4 floats
    CHECK(bytes.size() == 18 + (3 + 4 + 16) + (3 + 3 + 16) + (3 + 5 + 16));
  }
  SUBCASE("random caches survive binary round trip after one float rounding") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0.0, 3.0);
    EmbeddingCache r;
    for (int i = 0; i < 50; ++i) {
      std::vector<double> v(7);
      for (auto& x : v) x = static_cast<float>(n(rng));
      r.insert({"t" + std::to_string(i), static_cast<EmbeddingKind>(i % 3), vec(v)});
    }
    save_cache(r, dir / "r.bin", CacheFormat::binary);
    CHECK(load_cache(dir / "r.bin") == r);
  }
}

TEST_CASE("binary loader rejects damaged files") {
  test::TempDir dir;
  save_cache(small_cache(), dir / "c.bin", CacheFormat::binary);
  const auto bytes = test::read_file(dir / "c.bin");

  SUBCASE("truncated") {
    const auto p = dir.write("t.bin", bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(load_cache(p), InputError);
  }
  SUBCASE("unknown version") {
    auto b = bytes;
    b[4] = 9;
    CHECK_THROWS_AS(load_cache(dir.write("v.bin", b)), InputError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_cache(dir / "absent.bin"), InputError); }
}

TEST_CASE("format is chosen by extension") {
  CHECK(format_for_path("a.bin") == CacheFormat::binary);
  CHECK(format_for_path("a.fsao") == CacheFormat::binary);
  CHECK(format_for_path("a.jsonl") == CacheFormat::jsonl);
  CHECK(parse_embedding_kind("sentence") == EmbeddingKind::sentence);
  CHECK_THROWS_AS(parse_embedding_kind("video"), InputError);
}
