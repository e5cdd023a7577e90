#include "fisao/embed_store.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "fisao/error.hpp"

namespace fisao {
namespace {

constexpr std::array<char, 4> kCacheMagic{'F', 'S', 'A', 'O'};
constexpr std::uint16_t kCacheVersion = 1;

std::size_t kind_index(EmbeddingKind kind) { return static_cast<std::size_t>(kind); }

EmbeddingVector normalized(const EmbeddingVector& v, const std::string& id) {
  const double n = v.norm();
  if (n == 0.0) {
    throw InputError("cannot normalize zero vector for record '" + id + "'");
  }
  std::vector<double> out(v.values().begin(), v.values().end());
  for (double& x : out) x /= n;
  return EmbeddingVector(std::move(out));
}

void insert_loaded(EmbeddingCache& cache, EmbeddingRecord record, const LoadOptions& options) {
  if (options.normalize) {
    record.vector = normalized(record.vector, record.id);
  }
  cache.insert(std::move(record));
}

// Re-throws the active library error with a location prefix, keeping its type.
[[noreturn]] void rethrow_at(const std::string& where) {
  try {
    throw;
  } catch (const DimensionError& e) {
    throw DimensionError(where + ": " + e.what());
  } catch (const NumericError& e) {
    throw InputError(where + ": " + e.what());
  } catch (const Error& e) {
    throw InputError(where + ": " + e.what());
  }
}

}  // namespace

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) {
    throw DimensionError("embedding vector must have dim > 0");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw NumericError("embedding value " + std::to_string(i) + " is not finite");
    }
  }
}

double EmbeddingVector::norm() const noexcept {
  double s = 0.0;
  for (double x : values_) s += x * x;
  return std::sqrt(s);
}

std::string_view to_string(EmbeddingKind kind) {
  switch (kind) {
    case EmbeddingKind::image:
      return "image";
    case EmbeddingKind::token:
      return "token";
    case EmbeddingKind::sentence:
      return "sentence";
  }
  return "unknown";
}

EmbeddingKind parse_embedding_kind(std::string_view text) {
  if (text == "image") return EmbeddingKind::image;
  if (text == "token") return EmbeddingKind::token;
  if (text == "sentence") return EmbeddingKind::sentence;
  throw InputError("unknown embedding kind '" + std::string(text) + "'");
}

void EmbeddingCache::insert(EmbeddingRecord record) {
  if (record.id.empty()) {
    throw InputError("embedding record id must be non-empty");
  }
  if (dim_ && record.vector.dim() != *dim_) {
    throw DimensionError("record '" + record.id + "' has dim " + std::to_string(record.vector.dim()) +
                         ", cache dim is " + std::to_string(*dim_));
  }
  auto& index = index_[kind_index(record.kind)];
  if (index.contains(record.id)) {
    throw InputError("duplicate " + std::string(to_string(record.kind)) + " id '" + record.id + "'");
  }
  if (!dim_) dim_ = record.vector.dim();
  index.emplace(record.id, records_.size());
  records_.push_back(std::move(record));
}

const EmbeddingVector* EmbeddingCache::find(EmbeddingKind kind, std::string_view id) const {
  const auto& index = index_[kind_index(kind)];
  auto it = index.find(std::string(id));
  return it == index.end() ? nullptr : &records_[it->second].vector;
}

const EmbeddingVector& EmbeddingCache::at(EmbeddingKind kind, std::string_view id) const {
  if (const auto* v = find(kind, id)) return *v;
  throw InputError("missing " + std::string(to_string(kind)) + " embedding '" + std::string(id) + "'");
}

std::size_t EmbeddingCache::count(EmbeddingKind kind) const { return index_[kind_index(kind)].size(); }

std::vector<std::string> EmbeddingCache::ids(EmbeddingKind kind) const {
  std::vector<std::string> out;
  for (const auto& r : records_) {
    if (r.kind == kind) out.push_back(r.id);
  }
  return out;
}

EmbeddingCache read_cache_jsonl(std::istream& in, const LoadOptions& options) {
  EmbeddingCache cache;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(where + ": malformed JSON record (" + e.what() + ")");
    }
    if (!j.is_object()) throw InputError(where + ": record is not a JSON object");
    if (j.contains("metadata") && !j.contains("id")) {
      for (const auto& [k, v] : j.at("metadata").items()) {
        cache.metadata()[k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
      continue;
    }
    std::string id;
    try {
      id = j.at("id").get<std::string>();
      auto kind = parse_embedding_kind(j.at("kind").get<std::string>());
      auto values = j.at("values").get<std::vector<double>>();
      if (values.empty()) throw InputError("empty values array");
      insert_loaded(cache, EmbeddingRecord{id, kind, EmbeddingVector(std::move(values))}, options);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(where + (id.empty() ? "" : " (id '" + id + "')") + ": malformed record (" + e.what() + ")");
    } catch (const Error&) {
      rethrow_at(where + (id.empty() ? "" : " (id '" + id + "')"));
    }
  }
  return cache;
}

EmbeddingCache read_cache_binary(std::istream& in, const LoadOptions& options) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4 || magic != kCacheMagic) {
    throw InputError("binary cache: bad magic bytes");
  }
  const auto version = detail::read_le<std::uint16_t>(in, "version");
  if (version != kCacheVersion) {
    throw InputError("binary cache: unsupported version " + std::to_string(version));
  }
  const auto dim = detail::read_le<std::uint32_t>(in, "dim");
  const auto count = detail::read_le<std::uint64_t>(in, "record count");
  if (count > 0 && dim == 0) {
    throw InputError("binary cache: records present but dim is 0");
  }
  EmbeddingCache cache;
  for (std::uint64_t r = 0; r < count; ++r) {
    const std::string where = "record " + std::to_string(r);
    const auto kind_byte = detail::read_le<std::uint8_t>(in, "record kind");
    if (kind_byte > 2) throw InputError(where + ": invalid kind byte " + std::to_string(kind_byte));
    const auto id_len = detail::read_le<std::uint16_t>(in, "id length");
    std::string id(id_len, '\0');
    in.read(id.data(), id_len);
    if (in.gcount() != id_len) throw InputError(where + ": truncated id");
    std::vector<double> values(dim);
    for (auto& v : values) v = detail::read_f32(in, "vector value");
    try {
      insert_loaded(cache, EmbeddingRecord{id, static_cast<EmbeddingKind>(kind_byte), EmbeddingVector(std::move(values))},
                    options);
    } catch (const Error&) {
      rethrow_at(where + " (id '" + id + "')");
    }
  }
  return cache;
}

EmbeddingCache load_cache(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open cache file '" + path.string() + "'");
  std::array<char, 4> head{};
  in.read(head.data(), head.size());
  const bool binary = in.gcount() == 4 && head == kCacheMagic;
  in.clear();
  in.seekg(0);
  try {
    return binary ? read_cache_binary(in, options) : read_cache_jsonl(in, options);
  } catch (const DimensionError& e) {
    throw DimensionError(path.string() + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_cache_jsonl(const EmbeddingCache& cache, std::ostream& out) {
  if (!cache.metadata().empty()) {
    out << nlohmann::json{{"metadata", cache.metadata()}}.dump() << '\n';
  }
  for (const auto& r : cache.records()) {
    nlohmann::json j;
    j["id"] = r.id;
    j["kind"] = std::string(to_string(r.kind));
    j["values"] = std::vector<double>(r.vector.values().begin(), r.vector.values().end());
    out << j.dump() << '\n';
  }
}

void write_cache_binary(const EmbeddingCache& cache, std::ostream& out) {
  out.write(kCacheMagic.data(), kCacheMagic.size());
  detail::write_le<std::uint16_t>(out, kCacheVersion);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(cache.dim().value_or(0)));
  detail::write_le<std::uint64_t>(out, cache.size());
  for (const auto& r : cache.records()) {
    if (r.id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw InputError("id too long for binary cache: '" + r.id.substr(0, 32) + "...'");
    }
    detail::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(r.kind));
    detail::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(r.id.size()));
    out.write(r.id.data(), static_cast<std::streamsize>(r.id.size()));
    for (double v : r.vector.values()) detail::write_f32(out, v);
  }
}

CacheFormat format_for_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".bin" || ext == ".fsao") ? CacheFormat::binary : CacheFormat::jsonl;
}

void save_cache(const EmbeddingCache& cache, const std::filesystem::path& path, CacheFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write cache file '" + path.string() + "'");
  if (format == CacheFormat::binary) {
    write_cache_binary(cache, out);
  } else {
    write_cache_jsonl(cache, out);
  }
  if (!out) throw InputError("write failed for '" + path.string() + "'");
}

double score_token(const EmbeddingVector& token_vec, const EmbeddingVector& image_vec) {
  if (token_vec.dim() != image_vec.dim()) {
    throw DimensionError("score_token: dims " + std::to_string(token_vec.dim()) + " and " +
                         std::to_string(image_vec.dim()) + " differ");
  }
  const auto a = token_vec.values();
  const auto b = image_vec.values();
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double score_sentence(std::span<const EmbeddingVector* const> token_vecs, const EmbeddingVector& image_vec) {
  if (token_vecs.empty()) throw InputError("score_sentence: empty token list");
  std::vector<double> mean(image_vec.dim(), 0.0);
  for (const auto* v : token_vecs) {
    if (v->dim() != image_vec.dim()) throw DimensionError("score_sentence: token dim differs from image dim");
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += (*v)[i];
  }
  const double n = static_cast<double>(token_vecs.size());
  for (double& m : mean) m /= n;
  return score_token(EmbeddingVector(std::move(mean)), image_vec);
}

double score_sentence(std::span<const EmbeddingVector> token_vecs, const EmbeddingVector& image_vec) {
  std::vector<const EmbeddingVector*> ptrs;
  ptrs.reserve(token_vecs.size());
  for (const auto& v : token_vecs) ptrs.push_back(&v);
  return score_sentence(std::span<const EmbeddingVector* const>(ptrs), image_vec);
}

}  // namespace fisao
