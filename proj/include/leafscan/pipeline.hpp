#pragma once

// End-to-end wiring: image -> L*a*b* -> lesion segmentation -> features,
// and the operator-facing configuration record.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "leafscan/augmentation.hpp"
#include "leafscan/colorspace.hpp"
#include "leafscan/dataset.hpp"
#include "leafscan/evaluation.hpp"
#include "leafscan/features.hpp"
#include "leafscan/image_io.hpp"
#include "leafscan/segmentation.hpp"
#include "leafscan/trainers.hpp"

namespace leafscan {

inline std::vector<std::string> all_algorithm_names() {
  std::vector<std::string> out;
  for (Algorithm a : kAllAlgorithms) out.emplace_back(algorithm_name(a));
  return out;
}

struct PipelineConfig {
  std::string dataset_root;
  std::string features_csv = "features.csv";
  std::string output_dir = ".";
  int glcm_levels = kDefaultGrayLevels;
  int k_max = kDefaultMaxClusters;
  std::string lesion_rule = "auto";  // "auto" or a cluster index
  std::uint64_t segmentation_seed = kDefaultSegmentationSeed;
  std::string augment = "none";      // "none" or "all"
  int downscale = 1;
  std::string algorithm = "BR";
  int n_hidden = 20;
  int epochs = 1000;
  std::uint64_t seed = 42;
  int trials = 10;
  double train_ratio = 0.7;
  std::vector<std::string> sweep_algorithms = all_algorithm_names();
  std::vector<int> sweep_neurons{5, 10, 15, 20};
  std::string model;  // empty: <output_dir>/model.json
  std::string image;
  std::string mask;   // empty: <output_dir>/<image stem>_mask.png

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

// Missing keys keep their defaults.
#define LEAFSCAN_CONFIG_FIELDS(X) \
  X(dataset_root) \
  X(features_csv) \
  X(output_dir) \
  X(glcm_levels) \
  X(k_max) \
  X(lesion_rule) \
  X(segmentation_seed) \
  X(augment) \
  X(downscale) \
  X(algorithm) \
  X(n_hidden) \
  X(epochs) \
  X(seed) \
  X(trials) \
  X(train_ratio) \
  X(sweep_algorithms) \
  X(sweep_neurons) \
  X(model) \
  X(image) \
  X(mask)

inline void to_json(nlohmann::json& j, const PipelineConfig& c) {
  j = nlohmann::json::object();
#define LEAFSCAN_PUT(name) j[#name] = c.name;
  LEAFSCAN_CONFIG_FIELDS(LEAFSCAN_PUT)
#undef LEAFSCAN_PUT
}

inline void from_json(const nlohmann::json& j, PipelineConfig& c) {
#define LEAFSCAN_GET(name) \
  if (j.contains(#name)) j.at(#name).get_to(c.name);
  LEAFSCAN_CONFIG_FIELDS(LEAFSCAN_GET)
#undef LEAFSCAN_GET
}

#undef LEAFSCAN_CONFIG_FIELDS

/// Parses "auto" (nullopt) or a non-negative cluster index.
inline std::optional<int> parse_lesion_rule(const std::string& rule) {
  if (rule == "auto") return std::nullopt;
  std::size_t used = 0;
  int idx = -1;
  try {
    idx = std::stoi(rule, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != rule.size() || idx < 0) throw InputError("lesion rule must be 'auto' or a cluster index: " + rule);
  return idx;
}

inline Algorithm require_algorithm(const std::string& name) {
  const auto a = parse_algorithm(name);
  if (!a) throw InputError("unknown algorithm '" + name + "'; valid: " + algorithm_list());
  return *a;
}

inline void validate(const PipelineConfig& cfg) {
  if (cfg.glcm_levels < 2) throw InputError("glcm levels must be >= 2");
  if (cfg.k_max < 2) throw InputError("k_max must be >= 2");
  if (cfg.augment != "none" && cfg.augment != "all") throw InputError("augment must be 'none' or 'all'");
  if (cfg.downscale < 1) throw InputError("downscale must be >= 1");
  for (const std::string& name : cfg.sweep_algorithms) (void)require_algorithm(name);
  (void)require_algorithm(cfg.algorithm);
  for (int n : cfg.sweep_neurons) {
    if (n < 1) throw InputError("hidden neurons must be >= 1");
  }
  if (cfg.n_hidden < 1) throw InputError("hidden neurons must be >= 1");
  if (cfg.epochs < 1) throw InputError("epochs must be >= 1");
  if (cfg.trials < 1) throw InputError("trials must be >= 1");
  if (!(cfg.train_ratio > 0.0 && cfg.train_ratio < 1.0)) throw InputError("train ratio must lie in (0, 1)");
  (void)parse_lesion_rule(cfg.lesion_rule);
}

inline ExperimentConfig experiment_config(const PipelineConfig& cfg) {
  ExperimentConfig out;
  out.trainer.algorithm = require_algorithm(cfg.algorithm);
  out.trainer.max_epochs = cfg.epochs;
  out.trainer.seed = cfg.seed;
  out.n_hidden = cfg.n_hidden;
  out.train_ratio = cfg.train_ratio;
  return out;
}

inline SegmentOptions segment_options(const PipelineConfig& cfg) {
  return SegmentOptions{cfg.k_max, cfg.segmentation_seed, parse_lesion_rule(cfg.lesion_rule)};
}

struct ImageAnalysis {
  LabImage lab;
  SegmentationResult segmentation;
  FeatureVector features;
};

inline ImageAnalysis analyze_image(const RgbImage& rgb, const PipelineConfig& cfg) {
  ImageAnalysis out;
  out.lab = srgb_to_lab(cfg.downscale > 1 ? downscale(rgb, cfg.downscale) : rgb);
  out.segmentation = segment_lesion(out.lab, segment_options(cfg));
  out.features = extract_features(out.lab, out.segmentation.lesion_mask, cfg.glcm_levels);
  return out;
}

struct ExtractionResult {
  std::vector<LabeledSample> samples;
  std::vector<std::string> class_names;
  std::vector<std::string> warnings;
  std::size_t images_ok = 0;
};

/// Features of every dataset image; with augment = "all" each image also
/// contributes its three rotated lesion rasters, tagged as augmented rows.
/// Per-image failures become warnings.
inline ExtractionResult extract_dataset_features(const PipelineConfig& cfg,
                                                 const std::function<void(const std::string&)>& log = {}) {
  validate(cfg);
  DatasetIndex index = index_dataset(cfg.dataset_root);
  ExtractionResult out;
  out.class_names = index.class_names;
  out.warnings = index.warnings;
  auto warn = [&](std::string msg) {
    if (log) log(msg);
    out.warnings.push_back(std::move(msg));
  };
  for (const DatasetEntry& e : index.entries) {
    try {
      const ImageAnalysis a = analyze_image(read_image(e.path), cfg);
      out.samples.push_back({a.features, e.label, e.source_id});
      if (cfg.augment == "all") {
        for (int turns = 1; turns <= 3; ++turns) {
          const FeatureVector f = extract_features(rotate(a.lab, turns),
                                                   rotate(a.segmentation.lesion_mask, turns), cfg.glcm_levels);
          out.samples.push_back({f, e.label, augmented_source_id(e.source_id, turns)});
        }
      }
      ++out.images_ok;
    } catch (const Error& err) {
      warn("skipped " + e.source_id + ": " + err.what());
    }
  }
  return out;
}

}  // namespace leafscan
