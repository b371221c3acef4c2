#pragma once

// JSON forms of the model, training and evaluation reports (nlohmann/json).

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "leafscan/evaluation.hpp"
#include "leafscan/mlp.hpp"
#include "leafscan/trainers.hpp"

namespace leafscan {

using nlohmann::json;

namespace detail {

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw InputError(std::string("model: ") + what + " has the wrong number of rows");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw InputError(std::string("model: ") + what + " has the wrong number of columns");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline Eigen::VectorXd vector_from_json(const json& j, Eigen::Index size, const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size) {
    throw InputError(std::string("model: ") + what + " has the wrong length");
  }
  Eigen::VectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace detail

inline json classifier_to_json(const Classifier& clf) {
  const MlpParams& p = clf.params;
  return json{{"n_in", p.n_in()},
              {"n_hidden", p.n_hidden()},
              {"n_out", p.n_out()},
              {"W1", detail::matrix_to_json(p.w1)},
              {"b1", detail::vector_to_json(p.b1)},
              {"W2", detail::matrix_to_json(p.w2)},
              {"b2", detail::vector_to_json(p.b2)},
              {"feature_means", detail::vector_to_json(clf.scaler.means)},
              {"feature_sigmas", detail::vector_to_json(clf.scaler.sigmas)},
              {"class_names", clf.class_names}};
}

inline Classifier classifier_from_json(const json& j) {
  try {
    const int n_in = j.at("n_in").get<int>();
    const int n_hidden = j.at("n_hidden").get<int>();
    const int n_out = j.at("n_out").get<int>();
    Classifier clf;
    clf.params = MlpParams(n_in, n_hidden, n_out);
    clf.params.w1 = detail::matrix_from_json(j.at("W1"), n_hidden, n_in, "W1");
    clf.params.b1 = detail::vector_from_json(j.at("b1"), n_hidden, "b1");
    clf.params.w2 = detail::matrix_from_json(j.at("W2"), n_out, n_hidden, "W2");
    clf.params.b2 = detail::vector_from_json(j.at("b2"), n_out, "b2");
    clf.scaler.means = detail::vector_from_json(j.at("feature_means"), n_in, "feature_means");
    clf.scaler.sigmas = detail::vector_from_json(j.at("feature_sigmas"), n_in, "feature_sigmas");
    clf.class_names = j.at("class_names").get<std::vector<std::string>>();
    if (static_cast<int>(clf.class_names.size()) != n_out) throw InputError("model: class_names length != n_out");
    return clf;
  } catch (const json::exception& e) {
    throw InputError(std::string("model: ") + e.what());
  }
}

inline json train_report_to_json(const TrainReport& r) {
  json j{{"algorithm", algorithm_name(r.algorithm)},
         {"epochs_run", r.epochs_run},
         {"stop_reason", stop_reason_name(r.stop_reason)},
         {"loss_history", r.loss_history}};
  j["final_loss"] = r.loss_history.empty() ? json(nullptr) : json(r.loss_history.back());
  if (!r.mu_history.empty()) j["mu_history"] = r.mu_history;
  if (r.bayes) {
    j["effective_parameters"] = r.bayes->gamma;
    j["alpha"] = r.bayes->alpha;
    j["beta"] = r.bayes->beta;
  }
  return j;
}

inline json evaluation_report_to_json(const EvaluationReport& r) {
  json trials = json::array();
  for (const TrialResult& t : r.trials) {
    trials.push_back(json{{"seed", t.seed},
                          {"accuracy", t.accuracy},
                          {"confusion", t.confusion.rows()},
                          {"train_rows", t.train_rows},
                          {"test_rows", t.test_rows},
                          {"epochs_run", t.epochs_run},
                          {"stop_reason", stop_reason_name(t.stop_reason)}});
  }
  return json{{"algorithm", algorithm_name(r.algorithm)},
              {"n_hidden", r.n_hidden},
              {"trials", std::move(trials)},
              {"mean_accuracy", r.mean_accuracy}};
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw InputError("cannot write " + path.string());
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace leafscan
