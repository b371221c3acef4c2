// leafscan: batch front end for lesion segmentation, feature extraction and
// classifier training.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "leafscan/leafscan.hpp"

namespace fs = std::filesystem;
using namespace leafscan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitDegenerate = 3;

void log(const std::string& msg) { std::cerr << "leafscan: " << msg << '\n'; }

// Options bound straight to PipelineConfig members. Values given on the
// command line win over the --config file.
class Flags {
 public:
  explicit Flags(PipelineConfig& cfg) : cfg_(cfg) {}

  template <typename T>
  CLI::Option* add(CLI::App* app, const std::string& flag, T PipelineConfig::*member, const std::string& help) {
    CLI::Option* opt = app->add_option(flag, cfg_.*member, help)->capture_default_str();
    bindings_[app].push_back({opt, [this, member](const PipelineConfig& from) { cfg_.*member = from.*member; }});
    return opt;
  }

  void merge_config_file(CLI::App* app, const std::string& path) {
    const json j = read_json(path);
    if (!j.is_object()) throw InputError(path + ": config must be a JSON object");
    const json known = PipelineConfig{};
    for (const auto& [key, value] : j.items()) {
      if (!known.contains(key)) throw InputError(path + ": unknown config key '" + key + "'");
    }
    PipelineConfig from;
    try {
      from = j.get<PipelineConfig>();
    } catch (const json::exception& e) {
      throw InputError(path + ": " + e.what());
    }
    const PipelineConfig cli = cfg_;
    cfg_ = from;
    for (const Binding& b : bindings_[app]) {
      if (b.opt->count() > 0) b.take(cli);
    }
  }

 private:
  struct Binding {
    CLI::Option* opt;
    std::function<void(const PipelineConfig&)> take;
  };
  PipelineConfig& cfg_;
  std::map<CLI::App*, std::vector<Binding>> bindings_;
};

std::string percent(double accuracy) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * accuracy);
  return buf;
}

fs::path in_output_dir(const PipelineConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.output_dir);
  return fs::path(cfg.output_dir) / name;
}

json cluster_report(const SegmentationResult& seg) {
  json centers = json::array();
  for (const Point2& c : seg.model.centers) centers.push_back({c.a, c.b});
  return json{{"k", seg.model.k},
              {"centers", std::move(centers)},
              {"lesion_cluster", seg.lesion_cluster},
              {"wcss", seg.model.wcss},
              {"lesion_pixels", count_selected(seg.lesion_mask)}};
}

json features_json(const FeatureVector& f) {
  json out = json::object();
  for (std::size_t j = 0; j < kFeatureCount; ++j) out["F" + std::to_string(j + 1)] = f[j];
  return out;
}

int cmd_extract(const PipelineConfig& cfg) {
  if (cfg.dataset_root.empty()) throw InputError("--dataset is required");
  ExtractionResult res = extract_dataset_features(cfg, log);
  if (res.class_names.empty()) {
    log("no classes found");
    return kExitInput;
  }
  if (res.images_ok == 0) {
    log("no image could be processed");
    return kExitInput;
  }
  write_feature_table(res.samples, cfg.features_csv);
  log("wrote " + std::to_string(res.samples.size()) + " rows to " + cfg.features_csv);
  std::cout << json{{"features_csv", cfg.features_csv},
                    {"classes", res.class_names},
                    {"images", res.images_ok},
                    {"rows", res.samples.size()},
                    {"warnings", res.warnings}}
                   .dump(2)
            << '\n';
  return kExitOk;
}

std::vector<LabeledSample> load_features(const PipelineConfig& cfg) {
  std::vector<LabeledSample> rows = read_feature_table(cfg.features_csv);
  if (rows.empty()) throw InputError(cfg.features_csv + ": no data rows");
  return rows;
}

int cmd_train(const PipelineConfig& cfg) {
  const std::vector<LabeledSample> rows = load_features(cfg);
  const std::vector<std::string> classes = class_names_of(rows);
  const ExperimentConfig exp = experiment_config(cfg);
  log("training " + cfg.algorithm + " with N=" + std::to_string(cfg.n_hidden) + " on " +
      std::to_string(rows.size()) + " rows");
  FitResult fit = fit_classifier(rows, static_cast<int>(classes.size()), exp, cfg.seed);
  fit.classifier.class_names = classes;

  const ConfusionMatrix cm = evaluate(fit.classifier, rows, static_cast<int>(classes.size()));
  const fs::path model_path = cfg.model.empty() ? in_output_dir(cfg, "model.json") : fs::path(cfg.model);
  const fs::path report_path = in_output_dir(cfg, "train_report.json");
  write_json(model_path, classifier_to_json(fit.classifier));
  json report = train_report_to_json(fit.report);
  report["n_hidden"] = cfg.n_hidden;
  report["train_accuracy"] = overall_accuracy(cm);
  write_json(report_path, report);

  std::cout << json{{"model", model_path.string()},
                    {"report", report_path.string()},
                    {"algorithm", cfg.algorithm},
                    {"epochs_run", fit.report.epochs_run},
                    {"stop_reason", stop_reason_name(fit.report.stop_reason)},
                    {"final_loss", report["final_loss"]},
                    {"train_accuracy", overall_accuracy(cm)}}
                   .dump(2)
            << '\n';
  return kExitOk;
}

int cmd_sweep(const PipelineConfig& cfg) {
  const std::vector<LabeledSample> rows = load_features(cfg);
  json trials = json::array();
  json grid = json::array();
  std::string grid_csv = "algorithm";
  for (int n : cfg.sweep_neurons) grid_csv += ",N=" + std::to_string(n);
  grid_csv += '\n';
  std::string summary_csv = "algorithm,n_hidden,trials,mean_accuracy\n";

  for (const std::string& name : cfg.sweep_algorithms) {
    grid_csv += name;
    json cells = json::array();
    for (int n : cfg.sweep_neurons) {
      PipelineConfig cell = cfg;
      cell.algorithm = name;
      cell.n_hidden = n;
      try {
        const EvaluationReport r = run_trials(rows, experiment_config(cell), cfg.trials, cfg.seed);
        log(name + " N=" + std::to_string(n) + ": mean accuracy " + percent(r.mean_accuracy) + "%");
        trials.push_back(evaluation_report_to_json(r));
        grid_csv += "," + percent(r.mean_accuracy);
        summary_csv += name + "," + std::to_string(n) + "," + std::to_string(cfg.trials) + "," +
                       csv::format_double(r.mean_accuracy) + "\n";
        cells.push_back(r.mean_accuracy);
      } catch (const Error& e) {
        log(name + " N=" + std::to_string(n) + " failed: " + e.what());
        grid_csv += ",";
        summary_csv += name + "," + std::to_string(n) + "," + std::to_string(cfg.trials) + ",\n";
        cells.push_back(nullptr);
      }
    }
    grid_csv += '\n';
    grid.push_back(json{{"algorithm", name}, {"mean_accuracy", std::move(cells)}});
  }

  const fs::path grid_path = in_output_dir(cfg, "sweep_grid.csv");
  const fs::path summary_path = in_output_dir(cfg, "sweep_summary.csv");
  const fs::path trials_path = in_output_dir(cfg, "sweep_trials.json");
  for (const auto& [path, text] : {std::pair{grid_path, grid_csv}, std::pair{summary_path, summary_csv}}) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw InputError("cannot write " + path.string());
  }
  write_json(trials_path, trials);
  std::cout << json{{"grid_csv", grid_path.string()},
                    {"summary_csv", summary_path.string()},
                    {"trials_json", trials_path.string()},
                    {"neurons", cfg.sweep_neurons},
                    {"grid", std::move(grid)}}
                   .dump(2)
            << '\n';
  return kExitOk;
}

int cmd_classify(const PipelineConfig& cfg) {
  if (cfg.image.empty()) throw InputError("--image is required");
  const fs::path model_path = cfg.model.empty() ? fs::path(cfg.output_dir) / "model.json" : fs::path(cfg.model);
  const Classifier clf = classifier_from_json(read_json(model_path));
  const ImageAnalysis a = analyze_image(read_image(cfg.image), cfg);
  Eigen::VectorXd x(static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t j = 0; j < kFeatureCount; ++j) x[static_cast<Eigen::Index>(j)] = a.features[j];
  const Eigen::VectorXd out = forward(clf.params, clf.scaler.apply(x));
  const int cls = argmax(out);
  std::vector<double> outputs(out.data(), out.data() + out.size());
  std::cout << json{{"image", cfg.image},
                    {"predicted_index", cls},
                    {"predicted_class", clf.class_names.at(static_cast<std::size_t>(cls))},
                    {"outputs", outputs},
                    {"features", features_json(a.features)},
                    {"segmentation", cluster_report(a.segmentation)}}
                   .dump(2)
            << '\n';
  return kExitOk;
}

int cmd_segment(const PipelineConfig& cfg) {
  if (cfg.image.empty()) throw InputError("--image is required");
  const RgbImage rgb = read_image(cfg.image);
  const LabImage lab = srgb_to_lab(cfg.downscale > 1 ? downscale(rgb, cfg.downscale) : rgb);
  const SegmentationResult seg = segment_lesion(lab, segment_options(cfg));
  const fs::path mask_path =
      cfg.mask.empty() ? in_output_dir(cfg, fs::path(cfg.image).stem().string() + "_mask.png") : fs::path(cfg.mask);
  write_mask_png(mask_path, seg.lesion_mask);
  json report = cluster_report(seg);
  report["mask"] = mask_path.string();
  std::cout << report.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Leaf lesion segmentation, texture features and neural classifier training"};
  app.require_subcommand(1);
  PipelineConfig cfg;
  Flags flags(cfg);
  std::string config_path;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file; command-line flags override its values")
        ->check(CLI::ExistingFile);
  };
  auto add_segmentation = [&](CLI::App* sub) {
    flags.add(sub, "--glcm-levels", &PipelineConfig::glcm_levels, "Gray levels of the co-occurrence matrix");
    flags.add(sub, "--k-max", &PipelineConfig::k_max, "Largest k tried by the elbow search");
    flags.add(sub, "--lesion", &PipelineConfig::lesion_rule, "Lesion cluster: 'auto' (largest a*) or an index");
    flags.add(sub, "--seg-seed", &PipelineConfig::segmentation_seed, "k-means seed");
    flags.add(sub, "--downscale", &PipelineConfig::downscale, "Integer box downscale factor (1 = off)");
  };
  auto add_training = [&](CLI::App* sub) {
    flags.add(sub, "--features", &PipelineConfig::features_csv, "Feature CSV");
    flags.add(sub, "--epochs", &PipelineConfig::epochs, "Maximum training epochs");
    flags.add(sub, "--seed", &PipelineConfig::seed, "Seed for weights (and splits in sweeps)");
    flags.add(sub, "--out-dir", &PipelineConfig::output_dir, "Directory for artifacts");
  };

  CLI::App* extract = app.add_subcommand("extract", "Segment every dataset image and write the feature CSV");
  add_config(extract);
  flags.add(extract, "--dataset", &PipelineConfig::dataset_root, "Dataset root, one subdirectory per class");
  flags.add(extract, "--out", &PipelineConfig::features_csv, "Feature CSV to write");
  flags.add(extract, "--augment", &PipelineConfig::augment, "'all' adds 90/180/270 degree rotations, or 'none'");
  add_segmentation(extract);

  CLI::App* train = app.add_subcommand("train", "Train a classifier on a feature CSV");
  add_config(train);
  add_training(train);
  flags.add(train, "--algorithm", &PipelineConfig::algorithm, "Training algorithm: " + algorithm_list());
  flags.add(train, "--hidden", &PipelineConfig::n_hidden, "Hidden neurons");
  flags.add(train, "--model", &PipelineConfig::model, "Model JSON to write (default <out-dir>/model.json)");

  CLI::App* sweep = app.add_subcommand("sweep", "Mean test accuracy over repeated splits for each algorithm and N");
  add_config(sweep);
  add_training(sweep);
  flags.add(sweep, "--trials", &PipelineConfig::trials, "Repeats per grid cell");
  flags.add(sweep, "--train-ratio", &PipelineConfig::train_ratio, "Training share of each class");
  flags.add(sweep, "--algorithms", &PipelineConfig::sweep_algorithms, "Grid rows")->delimiter(',');
  flags.add(sweep, "--neurons", &PipelineConfig::sweep_neurons, "Grid columns")->delimiter(',');

  CLI::App* classify = app.add_subcommand("classify", "Predict the class of one image");
  add_config(classify);
  flags.add(classify, "--model", &PipelineConfig::model, "Model JSON (default <out-dir>/model.json)");
  flags.add(classify, "--image", &PipelineConfig::image, "PNG or JPEG image");
  flags.add(classify, "--out-dir", &PipelineConfig::output_dir, "Directory holding model.json");
  add_segmentation(classify);

  CLI::App* segment = app.add_subcommand("segment", "Write the lesion mask of one image");
  add_config(segment);
  flags.add(segment, "--image", &PipelineConfig::image, "PNG or JPEG image");
  flags.add(segment, "--mask", &PipelineConfig::mask, "Mask PNG to write (default <out-dir>/<stem>_mask.png)");
  flags.add(segment, "--out-dir", &PipelineConfig::output_dir, "Directory for the mask");
  add_segmentation(segment);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    if (!config_path.empty()) flags.merge_config_file(sub, config_path);
    validate(cfg);
    if (sub == extract) return cmd_extract(cfg);
    if (sub == train) return cmd_train(cfg);
    if (sub == sweep) return cmd_sweep(cfg);
    if (sub == classify) return cmd_classify(cfg);
    if (sub == segment) return cmd_segment(cfg);
  } catch (const DegenerateLesion& e) {
    log(std::string("lesion segmentation failed: ") + e.what());
    return kExitDegenerate;
  } catch (const InputError& e) {
    log(e.what());
    return kExitInput;
  } catch (const Error& e) {
    log(std::string("error: ") + e.what());
    return 1;
  } catch (const std::exception& e) {
    log(std::string("error: ") + e.what());
    return 1;
  }
  return kExitInput;
}
