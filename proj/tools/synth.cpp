// leafscan-synth: synthetic inputs for demos and tests.
//   leaves: class-per-directory PNG leaves whose classes differ by spot color
//   blobs:  Gaussian-blob feature CSV in the extract output format

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "leafscan/leafscan.hpp"

namespace fs = std::filesystem;
using namespace leafscan;

namespace {

struct LeafClass {
  const char* name;
  Rgb spot;
  int noise;
};

// Spots span a range of lightness so the intensity statistics separate them.
const std::vector<LeafClass> kLeafClasses{
    {"blight", {95, 60, 35}, 4},
    {"mold", {150, 110, 60}, 10},
    {"rust", {190, 95, 45}, 6},
    {"scorch", {215, 170, 120}, 3},
    {"spot", {130, 45, 50}, 14},
};

std::vector<LabeledSample> blob_samples(int n, int classes, double spacing, double sigma, std::uint64_t seed) {
  const BlobDataset blobs = make_blobs(n, classes, static_cast<int>(kFeatureCount), spacing, sigma, seed);
  std::vector<LabeledSample> out;
  for (int i = 0; i < n; ++i) {
    LabeledSample s;
    for (std::size_t j = 0; j < kFeatureCount; ++j) s.features[j] = blobs.features(i, static_cast<Eigen::Index>(j));
    const int c = blobs.labels[static_cast<std::size_t>(i)];
    s.label = {c, "class" + std::to_string(c)};
    char id[32];
    std::snprintf(id, sizeof id, "blob/%04d", i);
    s.source_id = id;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic leaf images and feature tables"};
  app.require_subcommand(1);

  std::string out;
  int per_class = 8;
  int classes = 5;
  std::size_t size = 64;
  std::uint64_t seed = 1;
  int n = 200;
  double spacing = 10.0;
  double sigma = 1.0;

  CLI::App* leaves = app.add_subcommand("leaves", "Write <out>/<class>/leaf_NNN.png");
  leaves->add_option("--out", out, "Output dataset root")->required();
  leaves->add_option("--per-class", per_class, "Images per class")->capture_default_str();
  leaves->add_option("--classes", classes, "Number of classes (1-5)")->capture_default_str()->check(CLI::Range(1, 5));
  leaves->add_option("--size", size, "Image side in pixels")->capture_default_str();
  leaves->add_option("--seed", seed, "Random seed")->capture_default_str();

  CLI::App* blobs = app.add_subcommand("blobs", "Write a Gaussian-blob feature CSV");
  blobs->add_option("--out", out, "Output CSV")->required();
  blobs->add_option("-n", n, "Rows")->capture_default_str();
  blobs->add_option("--classes", classes, "Classes")->capture_default_str()->check(CLI::Range(1, 13));
  blobs->add_option("--spacing", spacing, "Distance of each class center from the origin")->capture_default_str();
  blobs->add_option("--sigma", sigma, "Per-axis standard deviation")->capture_default_str();
  blobs->add_option("--seed", seed, "Random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*leaves) {
      for (int c = 0; c < classes; ++c) {
        const LeafClass& lc = kLeafClasses[static_cast<std::size_t>(c)];
        const fs::path dir = fs::path(out) / lc.name;
        fs::create_directories(dir);
        for (int i = 0; i < per_class; ++i) {
          const std::uint64_t s = seed * 1000003 + static_cast<std::uint64_t>(c * 10007 + i);
          char name[32];
          std::snprintf(name, sizeof name, "leaf_%03d.png", i);
          write_png(dir / name, make_leaf(size, s, lc.spot, lc.noise, true).image);
        }
      }
    } else {
      write_feature_table(blob_samples(n, classes, spacing, sigma, seed), out);
    }
  } catch (const Error& e) {
    std::cerr << "leafscan-synth: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
