#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "leafscan/dataset.hpp"
#include "leafscan/error.hpp"
#include "leafscan/mlp.hpp"
#include "leafscan/random.hpp"
#include "leafscan/trainers.hpp"

namespace leafscan {

/// Rows are the true class, columns the predicted class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int classes = 0)
      : classes_(classes), counts_(static_cast<std::size_t>(classes) * static_cast<std::size_t>(classes), 0) {
    if (classes < 0) throw InputError("confusion matrix: negative class count");
  }

  static ConfusionMatrix from_rows(const std::vector<std::vector<std::uint64_t>>& rows) {
    ConfusionMatrix cm(static_cast<int>(rows.size()));
    for (std::size_t t = 0; t < rows.size(); ++t) {
      if (rows[t].size() != rows.size()) throw InputError("confusion matrix must be square");
      for (std::size_t p = 0; p < rows.size(); ++p) cm.at(static_cast<int>(t), static_cast<int>(p)) = rows[t][p];
    }
    return cm;
  }

  int classes() const { return classes_; }

  std::uint64_t& at(int truth, int predicted) {
    return counts_[static_cast<std::size_t>(truth) * static_cast<std::size_t>(classes_) + static_cast<std::size_t>(predicted)];
  }
  std::uint64_t at(int truth, int predicted) const {
    return counts_[static_cast<std::size_t>(truth) * static_cast<std::size_t>(classes_) + static_cast<std::size_t>(predicted)];
  }

  void add(int truth, int predicted) {
    if (truth < 0 || truth >= classes_ || predicted < 0 || predicted >= classes_) {
      throw InputError("confusion matrix: class index out of range");
    }
    ++at(truth, predicted);
  }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto v : counts_) t += v;
    return t;
  }

  std::uint64_t trace() const {
    std::uint64_t t = 0;
    for (int c = 0; c < classes_; ++c) t += at(c, c);
    return t;
  }

  std::vector<std::vector<std::uint64_t>> rows() const {
    std::vector<std::vector<std::uint64_t>> out(static_cast<std::size_t>(classes_));
    for (int t = 0; t < classes_; ++t)
      for (int p = 0; p < classes_; ++p) out[static_cast<std::size_t>(t)].push_back(at(t, p));
    return out;
  }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  int classes_;
  std::vector<std::uint64_t> counts_;
};

struct BinaryCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
};

/// (TP + TN) / (TP + TN + FP + FN)
inline double accuracy_binary(std::uint64_t tp, std::uint64_t tn, std::uint64_t fp, std::uint64_t fn) {
  const std::uint64_t total = tp + tn + fp + fn;
  if (total == 0) throw InputError("accuracy of zero samples");
  return static_cast<double>(tp + tn) / static_cast<double>(total);
}

inline double accuracy_binary(const BinaryCounts& c) { return accuracy_binary(c.tp, c.tn, c.fp, c.fn); }

/// One-vs-rest counts for class `c`.
inline BinaryCounts one_vs_rest(const ConfusionMatrix& cm, int c) {
  BinaryCounts out;
  std::uint64_t row = 0, col = 0;
  for (int k = 0; k < cm.classes(); ++k) {
    row += cm.at(c, k);
    col += cm.at(k, c);
  }
  out.tp = cm.at(c, c);
  out.fp = col - out.tp;
  out.fn = row - out.tp;
  out.tn = cm.total() - out.tp - out.fp - out.fn;
  return out;
}

/// trace / total.
inline double overall_accuracy(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (cm.classes() == 0 || total == 0) throw InputError("accuracy of an empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

/// The binary accuracy formula applied to one-vs-rest counts summed over all
/// classes. Equals 1 - 2 (1 - overall) / C.
inline double micro_averaged_accuracy(const ConfusionMatrix& cm) {
  BinaryCounts sum;
  for (int c = 0; c < cm.classes(); ++c) {
    const BinaryCounts b = one_vs_rest(cm, c);
    sum.tp += b.tp;
    sum.tn += b.tn;
    sum.fp += b.fp;
    sum.fn += b.fn;
  }
  return accuracy_binary(sum);
}

struct Split {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;
};

/// Per-class seeded shuffle, then the first round(ratio * size) samples of
/// each class (half rounds up) go to training. Classes are visited in index
/// order with one generator, so the split is a pure function of the seed.
inline Split split_stratified(const std::vector<LabeledSample>& samples, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InputError("split ratio must lie in (0, 1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < samples.size(); ++i) by_class[samples[i].label.index].push_back(i);
  Rng rng(seed);
  Split out;
  for (auto& [label, idx] : by_class) {
    if (idx.size() < 2) {
      throw InputError("class " + std::to_string(label) + " has fewer than 2 samples");
    }
    rng.shuffle(std::span<std::size_t>(idx));
    const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(idx.size()) + 0.5));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      (k < n_train ? out.train : out.test).push_back(samples[idx[k]]);
    }
  }
  return out;
}

struct ExperimentConfig {
  TrainerConfig trainer;
  int n_hidden = 20;
  double train_ratio = 0.7;
};

struct TrialResult {
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  int epochs_run = 0;
  StopReason stop_reason = StopReason::MaxEpochs;
  double final_loss = 0.0;
};

struct EvaluationReport {
  Algorithm algorithm = Algorithm::LM;
  int n_hidden = 0;
  std::vector<TrialResult> trials;
  double mean_accuracy = 0.0;
};

inline Eigen::MatrixXd feature_matrix(const std::vector<LabeledSample>& samples) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = 0; j < kFeatureCount; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = samples[i].features[j];
  return m;
}

inline std::vector<int> label_indices(const std::vector<LabeledSample>& samples) {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.label.index);
  return out;
}

inline int class_count(const std::vector<LabeledSample>& samples) {
  int c = 0;
  for (const auto& s : samples) c = std::max(c, s.label.index + 1);
  return c;
}

/// A trained network together with the input scaling it expects.
struct Classifier {
  MlpParams params;
  Standardizer scaler;
  std::vector<std::string> class_names;

  int predict(const FeatureVector& f) const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(kFeatureCount));
    for (std::size_t j = 0; j < kFeatureCount; ++j) x[static_cast<Eigen::Index>(j)] = f[j];
    return argmax(forward(params, scaler.apply(x)));
  }
};

struct FitResult {
  Classifier classifier;
  TrainReport report;
};

/// Standardizes on `train`, draws initial weights from `init_seed` and trains.
inline FitResult fit_classifier(const std::vector<LabeledSample>& rows, int classes, const ExperimentConfig& cfg,
                                std::uint64_t init_seed) {
  if (rows.size() < 2) throw InputError("need at least two training rows");
  StandardizedFeatures z = standardize(feature_matrix(rows));
  TrainingSet data{std::move(z.values), one_hot(label_indices(rows), classes)};
  const MlpParams p0 = init_params(static_cast<int>(kFeatureCount), cfg.n_hidden, classes, init_seed);
  TrainReport report = train(p0, data, cfg.trainer);
  Classifier clf{report.final_params, std::move(z.stats), {}};
  return {std::move(clf), std::move(report)};
}

inline ConfusionMatrix evaluate(const Classifier& clf, const std::vector<LabeledSample>& test, int classes) {
  ConfusionMatrix cm(classes);
  if (test.empty()) return cm;
  const std::vector<int> predicted = leafscan::predict(clf.params, clf.scaler.apply(feature_matrix(test)));
  for (std::size_t i = 0; i < test.size(); ++i) cm.add(test[i].label.index, predicted[i]);
  return cm;
}

/// One seeded trial: stratified split of the original rows, training side
/// extended by the augmented rows of its own images, standardization fitted
/// on the training side, training, then accuracy on the held-out originals.
inline TrialResult run_trial(const std::vector<LabeledSample>& samples, const ExperimentConfig& cfg,
                             std::uint64_t seed) {
  std::vector<LabeledSample> originals, augmented;
  for (const auto& s : samples) (is_augmented(s.source_id) ? augmented : originals).push_back(s);
  const int classes = class_count(samples);
  Split split = split_stratified(originals, cfg.train_ratio, seed);
  std::set<std::string> train_sources;
  for (const auto& s : split.train) train_sources.insert(s.source_id);
  for (const auto& s : augmented) {
    if (train_sources.count(base_source_id(s.source_id))) split.train.push_back(s);
  }
  FitResult fit = fit_classifier(split.train, classes, cfg, seed);
  TrialResult out;
  out.seed = seed;
  out.confusion = evaluate(fit.classifier, split.test, classes);
  out.accuracy = overall_accuracy(out.confusion);
  out.train_rows = split.train.size();
  out.test_rows = split.test.size();
  out.epochs_run = fit.report.epochs_run;
  out.stop_reason = fit.report.stop_reason;
  out.final_loss = fit.report.loss_history.empty() ? std::nan("") : fit.report.loss_history.back();
  return out;
}

/// Trials use seeds base_seed, base_seed + 1, ...; the mean is taken in
/// trial order.
inline EvaluationReport run_trials(const std::vector<LabeledSample>& samples, const ExperimentConfig& cfg,
                                   int n_trials, std::uint64_t base_seed) {
  if (n_trials < 1) throw InputError("n_trials must be >= 1");
  EvaluationReport report;
  report.algorithm = cfg.trainer.algorithm;
  report.n_hidden = cfg.n_hidden;
  double sum = 0.0;
  for (int i = 0; i < n_trials; ++i) {
    report.trials.push_back(run_trial(samples, cfg, base_seed + static_cast<std::uint64_t>(i)));
    sum += report.trials.back().accuracy;
  }
  report.mean_accuracy = sum / static_cast<double>(n_trials);
  return report;
}

}  // namespace leafscan
