#include "fisao/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>

#include <nlohmann/json.hpp>

#include "fisao/error.hpp"

namespace fisao {
namespace {

using json = nlohmann::json;

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  return out;
}

template <typename F>
void for_each_json_line(std::istream& in, F&& f) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      f(json::parse(line));
    } catch (const json::exception& e) {
      throw InputError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

ScoreLabel parse_label(const std::string& s) {
  if (s == "gt") return ScoreLabel::gt;
  if (s == "hal") return ScoreLabel::hal;
  throw InputError("unknown label '" + s + "'");
}

Granularity parse_granularity(const std::string& s) {
  if (s == "token") return Granularity::token;
  if (s == "sentence") return Granularity::sentence;
  throw InputError("unknown granularity '" + s + "'");
}

using Ngram = std::vector<std::string>;

std::map<Ngram, std::size_t> ngram_counts(std::span<const std::string> toks, std::size_t n) {
  std::map<Ngram, std::size_t> counts;
  if (toks.size() < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) ++counts[Ngram(toks.begin() + i, toks.begin() + i + n)];
  return counts;
}

double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace

std::string_view to_string(ScoreLabel l) { return l == ScoreLabel::gt ? "gt" : "hal"; }
std::string_view to_string(Granularity g) { return g == Granularity::token ? "token" : "sentence"; }

std::vector<LabeledScore> read_labeled_scores(std::istream& in) {
  std::vector<LabeledScore> out;
  for_each_json_line(in, [&](const json& j) {
    const double v = j.at("score").get<double>();
    if (!std::isfinite(v)) throw InputError("score must be finite");
    out.push_back({v, parse_label(j.at("label").get<std::string>()),
                   parse_granularity(j.value("granularity", std::string("token")))});
  });
  return out;
}

std::vector<LabeledScore> load_labeled_scores(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_labeled_scores(in);
}

void save_labeled_scores(std::span<const LabeledScore> scores, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& s : scores) {
    json j{{"score", s.value}, {"label", to_string(s.label)}, {"granularity", to_string(s.granularity)}};
    out << j.dump() << '\n';
  }
}

SeriesSummary summarize(std::span<const double> xs) {
  SeriesSummary s;
  s.count = xs.size();
  if (xs.empty()) return s;
  s.mean = mean_of(xs);
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

double median(std::span<const double> xs) {
  if (xs.empty()) throw InputError("median of an empty series");
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void Histogram::write_csv(std::ostream& out) const {
  out << "bin_lo,bin_hi";
  for (const auto& s : series) out << ',' << s;
  out << '\n';
  const auto old_precision = out.precision(17);
  for (std::size_t b = 0; b < bins(); ++b) {
    out << bin_edges[b] << ',' << bin_edges[b + 1];
    for (const auto& c : counts) out << ',' << c[b];
    out << '\n';
  }
  out.precision(old_precision);
}

Histogram histogram(std::span<const std::vector<double>> series, std::span<const std::string> names,
                    std::size_t n_bins) {
  if (n_bins == 0) throw InputError("histogram needs at least one bin");
  if (series.size() != names.size()) throw InputError("histogram: series and names differ in length");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : series) {
    for (double x : s) {
      if (!std::isfinite(x)) throw InputError("histogram values must be finite");
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if (!(lo <= hi)) throw InputError("histogram of empty input");
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  Histogram h;
  h.bin_edges.resize(n_bins + 1);
  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (std::size_t b = 0; b <= n_bins; ++b) h.bin_edges[b] = lo + width * static_cast<double>(b);
  h.bin_edges.back() = hi;
  h.series.assign(names.begin(), names.end());
  for (const auto& s : series) {
    std::vector<std::size_t> c(n_bins, 0);
    for (double x : s) {
      auto b = static_cast<std::size_t>((x - lo) / width);
      ++c[std::min(b, n_bins - 1)];
    }
    h.counts.push_back(std::move(c));
    h.summaries.push_back(summarize(s));
  }
  return h;
}

Histogram histogram(std::span<const LabeledScore> scores, std::size_t n_bins) {
  std::vector<std::vector<double>> series(2);
  for (const auto& s : scores) series[s.label == ScoreLabel::gt ? 0 : 1].push_back(s.value);
  const std::vector<std::string> names{"gt", "hal"};
  return histogram(series, names, n_bins);
}

double standardized_gap(std::span<const LabeledScore> scores, Granularity granularity) {
  std::vector<double> gt, hal;
  for (const auto& s : scores) {
    if (s.granularity != granularity) continue;
    (s.label == ScoreLabel::gt ? gt : hal).push_back(s.value);
  }
  if (gt.size() < 2 || hal.size() < 2) {
    throw InputError("standardized gap needs at least two scores per label at " + std::string(to_string(granularity)) +
                     " granularity");
  }
  const auto a = summarize(gt);
  const auto b = summarize(hal);
  const double pooled = std::sqrt((a.stddev * a.stddev + b.stddev * b.stddev) / 2.0);
  if (pooled == 0.0) throw NumericError("standardized gap: both series are constant");
  return (a.mean - b.mean) / pooled;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InputError("pearson: series differ in length");
  if (xs.size() < 2) throw InputError("pearson needs at least two points");
  const double mx = mean_of(xs);
  const double my = mean_of(ys);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw NumericError("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

LinearFit ols_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InputError("ols_fit: series differ in length");
  if (xs.size() < 2) throw InputError("ols_fit needs at least two points");
  const double mx = mean_of(xs);
  const double my = mean_of(ys);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == 0.0) throw NumericError("ols_fit: x has zero variance");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

double bleu(std::span<const std::string> candidate, std::span<const std::vector<std::string>> references,
            std::size_t max_n) {
  if (candidate.empty()) throw InputError("bleu: empty candidate");
  if (references.empty()) throw InputError("bleu needs at least one reference");
  for (const auto& ref : references) {
    if (ref.empty()) throw InputError("bleu: empty reference");
  }
  if (max_n == 0) throw InputError("bleu max_n must be >= 1");

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    const auto cand = ngram_counts(candidate, n);
    std::map<Ngram, std::size_t> max_ref;
    for (const auto& ref : references) {
      for (const auto& [g, c] : ngram_counts(ref, n)) max_ref[g] = std::max(max_ref[g], c);
    }
    std::size_t total = 0, matched = 0;
    for (const auto& [g, c] : cand) {
      total += c;
      auto it = max_ref.find(g);
      if (it != max_ref.end()) matched += std::min(c, it->second);
    }
    double p = 1.0;
    if (total > 0) {
      p = matched == 0 ? 1.0 / static_cast<double>(total + 1)
                       : static_cast<double>(matched) / static_cast<double>(total);
    }
    log_sum += std::log(p);
  }

  const auto c = static_cast<double>(candidate.size());
  std::size_t best = references.front().size();
  for (const auto& ref : references) {
    const auto d = std::abs(static_cast<double>(ref.size()) - c);
    const auto db = std::abs(static_cast<double>(best) - c);
    if (d < db || (d == db && ref.size() < best)) best = ref.size();
  }
  const auto r = static_cast<double>(best);
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum / static_cast<double>(max_n));
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference, double beta) {
  if (candidate.empty() || reference.empty()) throw InputError("rouge_l: empty input");
  const auto l = static_cast<double>(lcs_length(candidate, reference));
  if (l == 0.0) return 0.0;
  const double p = l / static_cast<double>(candidate.size());
  const double r = l / static_cast<double>(reference.size());
  const double b2 = beta * beta;
  return (1.0 + b2) * p * r / (r + b2 * p);
}

CaptionRecord make_caption_record(std::string image_id, std::vector<std::string> tokens,
                                  std::set<std::string> gt_objects, const EntitySet& entities) {
  CaptionRecord rec;
  rec.image_id = std::move(image_id);
  rec.tokens = std::move(tokens);
  rec.gt_objects = std::move(gt_objects);
  for (const auto& m : match_spans(rec.tokens, entities)) {
    if (std::find(rec.mentioned_objects.begin(), rec.mentioned_objects.end(), m.canonical) ==
        rec.mentioned_objects.end()) {
      rec.mentioned_objects.push_back(m.canonical);
    }
  }
  return rec;
}

std::vector<CaptionRecord> read_caption_records(std::istream& in, const EntitySet* entities) {
  std::vector<CaptionRecord> out;
  for_each_json_line(in, [&](const json& j) {
    auto tokens = j.at("tokens").get<std::vector<std::string>>();
    auto gt = j.at("gt_objects").get<std::set<std::string>>();
    auto image_id = j.value("image_id", std::string());
    CaptionRecord rec;
    if (j.contains("mentioned_objects")) {
      rec.image_id = std::move(image_id);
      rec.tokens = std::move(tokens);
      rec.gt_objects = std::move(gt);
      for (auto& m : j.at("mentioned_objects").get<std::vector<std::string>>()) {
        if (std::find(rec.mentioned_objects.begin(), rec.mentioned_objects.end(), m) == rec.mentioned_objects.end()) {
          rec.mentioned_objects.push_back(std::move(m));
        }
      }
    } else if (entities != nullptr) {
      rec = make_caption_record(std::move(image_id), std::move(tokens), std::move(gt), *entities);
    } else {
      throw InputError("record has no mentioned_objects and no entity lexicon was given");
    }
    if (j.contains("references")) rec.references = j.at("references").get<std::vector<std::vector<std::string>>>();
    if (j.contains("score")) rec.score = j.at("score").get<double>();
    out.push_back(std::move(rec));
  });
  return out;
}

std::vector<CaptionRecord> load_caption_records(const std::filesystem::path& path, const EntitySet* entities) {
  auto in = open_in(path);
  return read_caption_records(in, entities);
}

void save_caption_records(std::span<const CaptionRecord> records, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& r : records) {
    json j{{"image_id", r.image_id},
           {"tokens", r.tokens},
           {"mentioned_objects", r.mentioned_objects},
           {"gt_objects", r.gt_objects}};
    if (!r.references.empty()) j["references"] = r.references;
    if (r.score) j["score"] = *r.score;
    out << j.dump() << '\n';
  }
}

ChairResult chair(std::span<const CaptionRecord> records) {
  if (records.empty()) throw InputError("chair needs at least one caption");
  ChairResult res;
  res.captions = records.size();
  for (const auto& r : records) {
    std::set<std::string> unique(r.mentioned_objects.begin(), r.mentioned_objects.end());
    std::size_t hal = 0;
    for (const auto& m : unique) hal += r.gt_objects.count(m) == 0 ? 1 : 0;
    res.mentions += unique.size();
    res.hallucinated_mentions += hal;
    if (hal > 0) ++res.hallucinated_captions;
  }
  res.chair_s = static_cast<double>(res.hallucinated_captions) / static_cast<double>(res.captions);
  if (res.mentions > 0) {
    res.chair_i = static_cast<double>(res.hallucinated_mentions) / static_cast<double>(res.mentions);
  }
  return res;
}

ShiftReport reward_shift_report(std::span<const double> before, std::span<const double> after, std::size_t n_bins) {
  if (before.empty() || after.empty()) throw InputError("reward shift report needs both series non-empty");
  ShiftReport rep;
  rep.before = summarize(before);
  rep.after = summarize(after);
  rep.median_before = median(before);
  rep.median_after = median(after);
  rep.mean_shift = rep.after.mean - rep.before.mean;
  const double pooled = std::sqrt((rep.before.stddev * rep.before.stddev + rep.after.stddev * rep.after.stddev) / 2.0);
  if (pooled > 0.0) {
    rep.standardized_shift = rep.mean_shift / pooled;
  } else if (rep.mean_shift != 0.0) {
    rep.standardized_shift = std::copysign(std::numeric_limits<double>::infinity(), rep.mean_shift);
  }
  const std::vector<std::vector<double>> series{{before.begin(), before.end()}, {after.begin(), after.end()}};
  const std::vector<std::string> names{"before", "after"};
  rep.overlay = histogram(series, names, n_bins);
  return rep;
}

}  // namespace fisao
