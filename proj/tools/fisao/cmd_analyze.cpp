#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "common.hpp"
#include "fisao/analysis.hpp"
#include "fisao/entity_lexicon.hpp"
#include "fisao/error.hpp"
#include "fisao/svg.hpp"

namespace fisao::cli {
namespace {

struct AnalyzeState {
  CommonFlags common;
  Schema schema;
  std::string scores;
  std::string captions;
  std::string labels;
  std::string synonyms;
  std::string pairs;
  std::string entity_scores;
  std::size_t bins = 20;
  double shift_fraction = 0.1;
};

std::optional<double> parse_number(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

/// Two numeric columns; a non-numeric first line is taken as a header.
std::pair<std::vector<double>, std::vector<double>> read_columns(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::vector<double> xs, ys;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InputError(path + ":" + std::to_string(lineno) + ": expected two columns");
    const auto x = parse_number(std::string_view(line).substr(0, comma));
    auto rest = std::string_view(line).substr(comma + 1);
    rest = rest.substr(0, rest.find(','));
    const auto y = parse_number(rest);
    if (!x || !y) {
      if (xs.empty() && lineno == 1) continue;
      throw InputError(path + ":" + std::to_string(lineno) + ": non-numeric value");
    }
    xs.push_back(*x);
    ys.push_back(*y);
  }
  return {xs, ys};
}

std::string csv_of(const Histogram& h) {
  std::ostringstream os;
  h.write_csv(os);
  return os.str();
}

void analyze_scores(const AnalyzeState& st, const OutputDir& out) {
  const auto scores = load_labeled_scores(st.scores);
  if (scores.empty()) throw InputError("score file '" + st.scores + "' holds no records");
  nlohmann::json sep = nlohmann::json::object();
  for (auto g : {Granularity::token, Granularity::sentence}) {
    std::vector<LabeledScore> part;
    std::copy_if(scores.begin(), scores.end(), std::back_inserter(part),
                 [g](const LabeledScore& s) { return s.granularity == g; });
    if (part.empty()) continue;
    const std::string name(to_string(g));
    const auto h = histogram(part, st.bins);
    out.write_text("histogram_" + name + ".csv", csv_of(h));
    out.write_text("histogram_" + name + ".svg",
                   svg::histogram_svg(h, {name + "-level scores", "score", "count", 640, 400}));
    sep[name + "_gap"] = standardized_gap(part, g);
  }
  if (sep.contains("token_gap") && sep.contains("sentence_gap")) {
    sep["ratio"] = sep["token_gap"].get<double>() / sep["sentence_gap"].get<double>();
  }
  out.write_json("separation.json", sep);
  std::cout << "separation " << sep.dump() << '\n';
}

void analyze_captions(const AnalyzeState& st, const OutputDir& out) {
  std::optional<EntitySet> entities;
  if (!st.labels.empty()) {
    entities = EntitySet::build(read_label_file(st.labels),
                                st.synonyms.empty() ? SynonymTable{} : read_synonym_table(st.synonyms));
  }
  const auto records = load_caption_records(st.captions, entities ? &*entities : nullptr);
  if (records.empty()) throw InputError("caption file '" + st.captions + "' holds no records");

  const auto c = chair(records);
  std::ostringstream table;
  table.precision(17);
  table << "chair_s,chair_i,captions,hallucinated_captions,mentions,hallucinated_mentions\n"
        << c.chair_s << ',';
  if (c.chair_i) table << *c.chair_i;
  table << ',' << c.captions << ',' << c.hallucinated_captions << ',' << c.mentions << ',' << c.hallucinated_mentions
        << '\n';
  out.write_text("chair.csv", table.str());
  std::cout << "chair_s " << c.chair_s << '\n' << "chair_i " << (c.chair_i ? std::to_string(*c.chair_i) : "absent") << '\n';

  std::vector<double> score, bleu_v, rouge_v;
  std::ostringstream corr;
  corr.precision(17);
  corr << "index,image_id,score,bleu,rouge_l\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.score || r.references.empty()) continue;
    double best_rouge = 0.0;
    for (const auto& ref : r.references) best_rouge = std::max(best_rouge, rouge_l(r.tokens, ref));
    score.push_back(*r.score);
    bleu_v.push_back(bleu(r.tokens, r.references));
    rouge_v.push_back(best_rouge);
    corr << i << ',' << r.image_id << ',' << score.back() << ',' << bleu_v.back() << ',' << rouge_v.back() << '\n';
  }
  if (score.size() < 2) return;
  out.write_text("correlation.csv", corr.str());
  nlohmann::json summary;
  for (auto [name, metric] : {std::pair{"bleu", &bleu_v}, std::pair{"rouge_l", &rouge_v}}) {
    const auto fit = ols_fit(*metric, score);
    summary[name] = {{"pearson", pearson(*metric, score)}, {"slope", fit.slope}, {"intercept", fit.intercept}};
    out.write_text(std::string("scatter_") + name + ".svg",
                   svg::scatter_svg(*metric, score, fit, {std::string("verifier score vs ") + name, name, "score", 640, 400}));
  }
  summary["n"] = score.size();
  out.write_json("correlation.json", summary);
  std::cout << "correlation " << summary.dump() << '\n';
}

void analyze_pairs(const AnalyzeState& st, const OutputDir& out) {
  const auto [xs, ys] = read_columns(st.pairs);
  const double r = pearson(xs, ys);
  const auto fit = ols_fit(xs, ys);
  out.write_json("pairs.json", {{"pearson", r}, {"slope", fit.slope}, {"intercept", fit.intercept}, {"n", xs.size()}});
  out.write_text("scatter_pairs.svg", svg::scatter_svg(xs, ys, fit, {"pairs", "x", "y", 640, 400}));
  std::cout.precision(17);
  std::cout << "pearson " << r << '\n';
}

void analyze_shift(const AnalyzeState& st, const OutputDir& out) {
  const auto [iters, values] = read_columns(st.entity_scores);
  if (values.empty()) throw InputError("entity score file '" + st.entity_scores + "' holds no records");
  const double last = *std::max_element(iters.begin(), iters.end());
  const double span = last + 1.0;
  const double cut = st.shift_fraction * span;
  std::vector<double> before, after;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (iters[i] < cut) before.push_back(values[i]);
    if (iters[i] >= span - cut) after.push_back(values[i]);
  }
  const auto rep = reward_shift_report(before, after, st.bins);
  out.write_json("reward_shift.json", {{"mean_before", rep.before.mean},
                                       {"mean_after", rep.after.mean},
                                       {"median_before", rep.median_before},
                                       {"median_after", rep.median_after},
                                       {"mean_shift", rep.mean_shift},
                                       {"standardized_shift", rep.standardized_shift},
                                       {"n_before", rep.before.count},
                                       {"n_after", rep.after.count}});
  out.write_text("reward_shift.csv", csv_of(rep.overlay));
  out.write_text("reward_shift.svg", svg::histogram_svg(rep.overlay, {"entity scores before and after training",
                                                                      "score", "count", 640, 400}));
  std::cout << "mean_shift " << rep.mean_shift << '\n';
}

void run(AnalyzeState& st) {
  apply_config(st.common, st.schema);
  if (st.scores.empty() && st.captions.empty() && st.pairs.empty() && st.entity_scores.empty()) {
    throw InputError("analyze: give at least one of --scores, --captions, --pairs, --entity-scores");
  }
  if (st.bins == 0) throw ConfigError("bins must be >= 1");
  if (!(st.shift_fraction > 0.0 && st.shift_fraction <= 0.5)) throw ConfigError("shift_fraction must lie in (0, 0.5]");
  const OutputDir out(st.common.out, st.common.force);
  out.claim({"effective_config.json", "separation.json", "chair.csv", "pairs.json", "reward_shift.json"});
  if (!st.scores.empty()) analyze_scores(st, out);
  if (!st.captions.empty()) analyze_captions(st, out);
  if (!st.pairs.empty()) analyze_pairs(st, out);
  if (!st.entity_scores.empty()) analyze_shift(st, out);
  out.write_effective_config("analyze", st.schema.dump());
}

}  // namespace

void add_analyze(CLI::App& root) {
  auto* app = root.add_subcommand("analyze", "Score distributions, correlations, CHAIR, and reward shift");
  auto st = std::make_shared<AnalyzeState>();
  auto& s = st->schema;
  s.field("scores", st->scores, "Labelled scores (JSONL)");
  s.field("captions", st->captions, "Caption records (JSONL)");
  s.field("labels", st->labels, "Entity label file, for captions without mentioned_objects");
  s.field("synonyms", st->synonyms, "Tab-separated synonym table");
  s.field("pairs", st->pairs, "Two-column CSV for a correlation scatter");
  s.field("entity_scores", st->entity_scores, "iteration,score CSV written by train");
  s.field("bins", st->bins, "Histogram bins");
  s.field("shift_fraction", st->shift_fraction, "Share of iterations compared at each end");
  s.bind(*app);
  add_common_flags(*app, st->common);
  app->callback([st] { run(*st); });
}

}  // namespace fisao::cli
