#include "fisao/synth.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string_view>

#include <nlohmann/json.hpp>

#include "fisao/error.hpp"
#include "fisao/random.hpp"

namespace fisao {
namespace {

// COCO-style object names; synthetic names take over past the end of the list.
constexpr std::array<std::string_view, 48> kObjectNames{
    "person", "bicycle", "car",      "motorcycle", "airplane", "bus",    "train",   "truck",
    "boat",   "bench",   "bird",     "cat",        "dog",      "horse",  "sheep",   "cow",
    "bear",   "zebra",   "giraffe",  "backpack",   "umbrella", "handbag", "tie",    "suitcase",
    "kite",   "bottle",  "cup",      "fork",       "knife",    "spoon",  "bowl",    "banana",
    "apple",  "sandwich", "orange",  "broccoli",   "carrot",   "pizza",  "donut",   "cake",
    "chair",  "couch",   "bed",      "toilet",     "laptop",   "phone",  "clock",   "vase"};

constexpr std::array<std::string_view, 40> kFillerWords{
    "a",     "the",   "image",  "describe", "in",    "on",     "of",     "with",  "and",   "is",
    "are",   "there", "this",   "picture",  "shows", "near",   "next",   "to",    "sitting", "standing",
    "large", "small", "white",  "black",    "red",   "two",    "some",   "at",    "by",    "its",
    "an",    "under", "behind", "front",    "while", "looking", "holding", "area", "scene", "it"};

std::string image_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "img%03zu", i);
  return buf;
}

std::string entity_name(std::size_t i) {
  if (i < kObjectNames.size()) return std::string(kObjectNames[i]);
  char buf[32];
  std::snprintf(buf, sizeof buf, "object%03zu", i);
  return buf;
}

std::string filler_name(std::size_t i) {
  if (i < kFillerWords.size()) return std::string(kFillerWords[i]);
  char buf[32];
  std::snprintf(buf, sizeof buf, "word%03zu", i);
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (dim < 2) throw ConfigError("synth: dim must be >= 2");
  if (n_images == 0) throw ConfigError("synth: n_images must be >= 1");
  if (n_images > dim) throw ConfigError("synth: n_images must not exceed dim (images are basis directions)");
  if (!(gt_alignment > hal_alignment)) throw ConfigError("synth: gt_alignment must exceed hal_alignment");
  if (!(noise_scale >= 0.0)) throw ConfigError("synth: noise_scale must be >= 0");
  if (!(filler_scale >= 0.0)) throw ConfigError("synth: filler_scale must be >= 0");
  if (gt_per_image + hal_per_image > n_entity_tokens) {
    throw ConfigError("synth: gt_per_image + hal_per_image exceeds n_entity_tokens");
  }
}

SynthResult synth_cache(const SynthConfig& cfg) {
  cfg.validate();
  SynthResult out;
  Rng rng(cfg.seed);
  std::normal_distribution<double> unit_normal(0.0, 1.0);

  for (std::size_t i = 0; i < cfg.n_images; ++i) out.image_ids.push_back(image_name(i));
  for (std::size_t i = 0; i < cfg.n_entity_tokens; ++i) out.entity_tokens.push_back(entity_name(i));
  for (std::size_t i = 0; i < cfg.n_filler_tokens; ++i) out.filler_tokens.push_back(filler_name(i));

  // role[token][image]: 0 = unplanted, 1 = gt, 2 = hal
  std::vector<std::vector<int>> role(cfg.n_entity_tokens, std::vector<int>(cfg.n_images, 0));
  std::vector<std::size_t> order(cfg.n_entity_tokens);
  for (std::size_t img = 0; img < cfg.n_images; ++img) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    PlantedSet planted;
    for (std::size_t k = 0; k < cfg.gt_per_image; ++k) {
      role[order[k]][img] = 1;
    }
    for (std::size_t k = cfg.gt_per_image; k < cfg.gt_per_image + cfg.hal_per_image; ++k) {
      role[order[k]][img] = 2;
    }
    // Report in vocabulary order so labels do not depend on shuffle internals.
    for (std::size_t t = 0; t < cfg.n_entity_tokens; ++t) {
      if (role[t][img] == 1) planted.gt.push_back(out.entity_tokens[t]);
      if (role[t][img] == 2) planted.hal.push_back(out.entity_tokens[t]);
    }
    out.labels.emplace(out.image_ids[img], std::move(planted));
  }

  for (std::size_t img = 0; img < cfg.n_images; ++img) {
    std::vector<double> v(cfg.dim, 0.0);
    v[img] = 1.0;
    out.cache.insert({out.image_ids[img], EmbeddingKind::image, EmbeddingVector(std::move(v))});
  }

  for (std::size_t t = 0; t < cfg.n_entity_tokens; ++t) {
    std::vector<double> v(cfg.dim, 0.0);
    for (std::size_t img = 0; img < cfg.n_images; ++img) {
      const double target = role[t][img] == 1 ? cfg.gt_alignment : role[t][img] == 2 ? cfg.hal_alignment : 0.0;
      const double noise = cfg.noise_scale * unit_normal(rng);
      v[img] = cfg.noise_scale == 0.0 ? target : target + noise;
    }
    for (std::size_t d = cfg.n_images; d < cfg.dim; ++d) v[d] = cfg.filler_scale * unit_normal(rng);
    out.cache.insert({out.entity_tokens[t], EmbeddingKind::token, EmbeddingVector(std::move(v))});
  }

  for (std::size_t f = 0; f < cfg.n_filler_tokens; ++f) {
    std::vector<double> v(cfg.dim);
    for (double& x : v) x = cfg.filler_scale * unit_normal(rng);
    out.cache.insert({out.filler_tokens[f], EmbeddingKind::token, EmbeddingVector(std::move(v))});
  }
  return out;
}

void save_planted_labels(const PlantedLabels& labels, const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [image, set] : labels) {
    j[image] = {{"gt", set.gt}, {"hal", set.hal}};
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write planted labels '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

PlantedLabels load_planted_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open planted labels '" + path.string() + "'");
  PlantedLabels labels;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& [image, set] : j.items()) {
      labels[image] = PlantedSet{set.at("gt").get<std::vector<std::string>>(),
                                 set.at("hal").get<std::vector<std::string>>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": malformed planted labels (" + e.what() + ")");
  }
  return labels;
}

}  // namespace fisao
