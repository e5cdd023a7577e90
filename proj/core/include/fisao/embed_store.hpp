#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fisao {

/// A finite, non-empty real vector. Values are kept in double precision in
/// memory; the binary cache encoding stores them as 32-bit floats.
class EmbeddingVector {
 public:
  explicit EmbeddingVector(std::vector<double> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  /// Euclidean norm.
  double norm() const noexcept;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<double> values_;
};

enum class EmbeddingKind : std::uint8_t { image = 0, token = 1, sentence = 2 };

std::string_view to_string(EmbeddingKind kind);
EmbeddingKind parse_embedding_kind(std::string_view text);

struct EmbeddingRecord {
  std::string id;
  EmbeddingKind kind;
  EmbeddingVector vector;

  friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

/// Id-indexed collection of equal-dimension embeddings. Ids are unique per
/// kind; the same surface string may name both a token and a sentence.
/// Immutable once handed out as const, so concurrent lookups are safe.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;

  /// Undefined until the first record is inserted.
  std::optional<std::size_t> dim() const noexcept { return dim_; }

  /// Throws DimensionError on a length mismatch, InputError on a duplicate id.
  void insert(EmbeddingRecord record);

  const EmbeddingVector* find(EmbeddingKind kind, std::string_view id) const;
  /// Throws InputError naming the missing id.
  const EmbeddingVector& at(EmbeddingKind kind, std::string_view id) const;

  const EmbeddingVector& image(std::string_view id) const { return at(EmbeddingKind::image, id); }
  const EmbeddingVector& token(std::string_view id) const { return at(EmbeddingKind::token, id); }

  std::span<const EmbeddingRecord> records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  std::size_t count(EmbeddingKind kind) const;

  /// Ids of one kind in insertion order.
  std::vector<std::string> ids(EmbeddingKind kind) const;

  /// Free-form provenance (encoder id, prompt template). JSONL only.
  std::map<std::string, std::string>& metadata() noexcept { return metadata_; }
  const std::map<std::string, std::string>& metadata() const noexcept { return metadata_; }

  /// Compares dimension and records; metadata is not part of the identity.
  friend bool operator==(const EmbeddingCache& a, const EmbeddingCache& b) {
    return a.dim_ == b.dim_ && a.records_ == b.records_;
  }

 private:
  std::optional<std::size_t> dim_;
  std::vector<EmbeddingRecord> records_;
  std::array<std::unordered_map<std::string, std::size_t>, 3> index_;
  std::map<std::string, std::string> metadata_;
};

enum class CacheFormat { jsonl, binary };

struct LoadOptions {
  /// L2-normalize every vector at ingestion.
  bool normalize = false;
};

/// Reads either encoding; binary files are recognised by their magic bytes.
EmbeddingCache load_cache(const std::filesystem::path& path, const LoadOptions& options = {});
EmbeddingCache read_cache_jsonl(std::istream& in, const LoadOptions& options = {});
EmbeddingCache read_cache_binary(std::istream& in, const LoadOptions& options = {});

void save_cache(const EmbeddingCache& cache, const std::filesystem::path& path, CacheFormat format);
void write_cache_jsonl(const EmbeddingCache& cache, std::ostream& out);
void write_cache_binary(const EmbeddingCache& cache, std::ostream& out);

/// Picks the encoding from the extension: ".bin" / ".fsao" are binary.
CacheFormat format_for_path(const std::filesystem::path& path);

/// S(y_t, v): dot product of a token embedding with an image embedding.
double score_token(const EmbeddingVector& token_vec, const EmbeddingVector& image_vec);

/// Dot product of the mean-pooled token vectors with the image vector.
double score_sentence(std::span<const EmbeddingVector* const> token_vecs, const EmbeddingVector& image_vec);
double score_sentence(std::span<const EmbeddingVector> token_vecs, const EmbeddingVector& image_vec);

}  // namespace fisao
