#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fisao/entity_lexicon.hpp"

namespace fisao {

enum class ScoreLabel { gt, hal };
enum class Granularity { token, sentence };

std::string_view to_string(ScoreLabel l);
std::string_view to_string(Granularity g);

struct LabeledScore {
  double value;
  ScoreLabel label;
  Granularity granularity;
};

std::vector<LabeledScore> read_labeled_scores(std::istream& in);
std::vector<LabeledScore> load_labeled_scores(const std::filesystem::path& path);
void save_labeled_scores(std::span<const LabeledScore> scores, const std::filesystem::path& path);

struct SeriesSummary {
  std::size_t count = 0;
  double mean = 0.0;
  /// Sample standard deviation (n - 1); 0 for fewer than two values.
  double stddev = 0.0;
};

SeriesSummary summarize(std::span<const double> xs);

/// Equal-width histogram over the pooled range of several named series.
struct Histogram {
  std::vector<double> bin_edges;  // bins() + 1 strictly increasing edges
  std::vector<std::string> series;
  std::vector<std::vector<std::size_t>> counts;  // [series][bin]
  std::vector<SeriesSummary> summaries;          // [series]

  std::size_t bins() const noexcept { return bin_edges.empty() ? 0 : bin_edges.size() - 1; }
  void write_csv(std::ostream& out) const;
};

/// Bins span [min, max] of all values; a constant input gets the unit-width
/// range centred on it. Throws InputError on empty input or n_bins == 0.
Histogram histogram(std::span<const std::vector<double>> series, std::span<const std::string> names,
                    std::size_t n_bins);

/// Two series, "gt" and "hal", from labelled scores.
Histogram histogram(std::span<const LabeledScore> scores, std::size_t n_bins);

/// (mean_gt - mean_hal) / sqrt((var_gt + var_hal) / 2) over scores of one granularity.
double standardized_gap(std::span<const LabeledScore> scores, Granularity granularity);

/// Sample Pearson correlation. Throws InputError for mismatched or short
/// inputs and NumericError when either series has zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

struct LinearFit {
  double slope;
  double intercept;
};

/// Ordinary least squares y = slope * x + intercept.
LinearFit ols_fit(std::span<const double> xs, std::span<const double> ys);

/// Sentence BLEU with clipped n-gram precision and brevity penalty against the
/// closest reference length (shorter on ties). An order with zero clipped
/// matches uses (0 + 1) / (count + 1).
double bleu(std::span<const std::string> candidate, std::span<const std::vector<std::string>> references,
            std::size_t max_n = 4);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

/// Throws InputError on empty inputs.
/// LCS-based F-measure: (1 + b^2) P R / (R + b^2 P), b = 1.2 by default.
double rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference, double beta = 1.2);

struct CaptionRecord {
  std::string image_id;
  std::vector<std::string> tokens;
  /// Canonical labels mentioned in the caption, unique, in order of first mention.
  std::vector<std::string> mentioned_objects;
  std::set<std::string> gt_objects;
  /// Optional extras used by the correlation study.
  std::vector<std::vector<std::string>> references;
  std::optional<double> score;
};

/// Derives mentioned_objects from the tokens through the entity set.
CaptionRecord make_caption_record(std::string image_id, std::vector<std::string> tokens,
                                  std::set<std::string> gt_objects, const EntitySet& entities);

/// JSONL. Records lacking "mentioned_objects" are derived through `entities`
/// when given, otherwise rejected.
std::vector<CaptionRecord> read_caption_records(std::istream& in, const EntitySet* entities = nullptr);
std::vector<CaptionRecord> load_caption_records(const std::filesystem::path& path, const EntitySet* entities = nullptr);
void save_caption_records(std::span<const CaptionRecord> records, const std::filesystem::path& path);

struct ChairResult {
  double chair_s = 0.0;
  /// Absent when no caption mentions any object.
  std::optional<double> chair_i;
  std::size_t captions = 0;
  std::size_t hallucinated_captions = 0;
  std::size_t mentions = 0;
  std::size_t hallucinated_mentions = 0;
};

/// CHAIR_S = captions with a hallucinated mention / captions,
/// CHAIR_I = hallucinated mentions / mentions (unique objects per caption).
ChairResult chair(std::span<const CaptionRecord> records);

struct ShiftReport {
  SeriesSummary before;
  SeriesSummary after;
  double median_before = 0.0;
  double median_after = 0.0;
  double mean_shift = 0.0;
  /// mean_shift divided by the pooled standard deviation (0 when both are constant and equal).
  double standardized_shift = 0.0;
  Histogram overlay;
};

ShiftReport reward_shift_report(std::span<const double> before, std::span<const double> after, std::size_t n_bins = 20);

double median(std::span<const double> xs);

}  // namespace fisao
