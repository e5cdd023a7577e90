#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fisao/embed_store.hpp"

namespace fisao {

/// Parameters of the planted embedding generator.
///
/// Image i is the unit vector e_i, so the score of a token against image i is
/// exactly that token's i-th coordinate. Planted correct tokens carry
/// `gt_alignment` there, planted hallucinated tokens `hal_alignment`, both
/// perturbed by N(0, noise_scale^2). Other entity tokens sit at 0 + noise.
/// Filler (non-entity) tokens are dense N(0, filler_scale^2).
struct SynthConfig {
  std::size_t dim = 16;
  std::size_t n_images = 8;
  std::uint64_t seed = 7;
  double gt_alignment = 0.8;
  double hal_alignment = 0.2;
  double noise_scale = 0.05;

  std::size_t n_entity_tokens = 24;
  std::size_t gt_per_image = 4;
  std::size_t hal_per_image = 4;
  std::size_t n_filler_tokens = 39;
  double filler_scale = 0.5;

  /// Throws ConfigError.
  void validate() const;
};

struct PlantedSet {
  std::vector<std::string> gt;
  std::vector<std::string> hal;

  friend bool operator==(const PlantedSet&, const PlantedSet&) = default;
};

/// image id -> planted correct / hallucinated token ids.
using PlantedLabels = std::map<std::string, PlantedSet>;

struct SynthResult {
  EmbeddingCache cache;
  PlantedLabels labels;
  std::vector<std::string> image_ids;
  std::vector<std::string> entity_tokens;
  std::vector<std::string> filler_tokens;
};

/// Deterministic under `cfg.seed`.
SynthResult synth_cache(const SynthConfig& cfg);

void save_planted_labels(const PlantedLabels& labels, const std::filesystem::path& path);
PlantedLabels load_planted_labels(const std::filesystem::path& path);

}  // namespace fisao
