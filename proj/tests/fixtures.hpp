#pragma once

// Objectives and data draws shared by the unit tests and the acceptance run.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "leafscan/dataset.hpp"
#include "leafscan/mlp.hpp"
#include "leafscan/random.hpp"
#include "leafscan/synthetic.hpp"
#include "leafscan/trainers.hpp"

namespace fixture {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Rosenbrock {
  double value(const VectorXd& x) const {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  }
  double value_and_gradient(const VectorXd& x, VectorXd& g) const {
    g.resize(2);
    g[0] = -400.0 * x[0] * (x[1] - x[0] * x[0]) - 2.0 * (1.0 - x[0]);
    g[1] = 200.0 * (x[1] - x[0] * x[0]);
    return value(x);
  }
};

// Output layer of a network whose hidden layer is frozen: residuals are
// linear in (W2, b2), so the optimum solves the normal equations.
class OutputLayerFit {
 public:
  OutputLayerFit(MatrixXd hidden, MatrixXd targets) : h_(std::move(hidden)), t_(std::move(targets)) {}

  Eigen::Index outputs() const { return t_.cols(); }
  Eigen::Index dimension() const { return t_.cols() * (h_.cols() + 1); }
  double residual_scale() const { return 1.0 / static_cast<double>(t_.size()); }

  // theta row-major per output: w_c (hidden), then all biases, like MlpParams.
  MatrixXd predictions(const VectorXd& theta) const {
    const Eigen::Index n_hid = h_.cols(), c_out = t_.cols();
    MatrixXd w(c_out, n_hid);
    for (Eigen::Index c = 0; c < c_out; ++c)
      for (Eigen::Index j = 0; j < n_hid; ++j) w(c, j) = theta[c * n_hid + j];
    MatrixXd y = h_ * w.transpose();
    for (Eigen::Index c = 0; c < c_out; ++c) y.col(c).array() += theta[c_out * n_hid + c];
    return y;
  }
  void residuals(const VectorXd& theta, VectorXd& r) const {
    const MatrixXd e = predictions(theta) - t_;
    r.resize(e.size());
    for (Eigen::Index i = 0; i < e.rows(); ++i)
      for (Eigen::Index c = 0; c < e.cols(); ++c) r[i * e.cols() + c] = e(i, c);
  }
  void residuals_and_jacobian(const VectorXd& theta, VectorXd& r, MatrixXd& jac) const {
    residuals(theta, r);
    const Eigen::Index n_hid = h_.cols(), c_out = t_.cols();
    jac.setZero(r.size(), dimension());
    for (Eigen::Index i = 0; i < h_.rows(); ++i) {
      for (Eigen::Index c = 0; c < c_out; ++c) {
        for (Eigen::Index j = 0; j < n_hid; ++j) jac(i * c_out + c, c * n_hid + j) = h_(i, j);
        jac(i * c_out + c, c_out * n_hid + c) = 1.0;
      }
    }
  }
  double value(const VectorXd& theta) const { return residual_scale() * (predictions(theta) - t_).squaredNorm(); }
  double value_and_gradient(const VectorXd& theta, VectorXd& g) const {
    VectorXd r;
    MatrixXd jac;
    residuals_and_jacobian(theta, r, jac);
    g = 2.0 * residual_scale() * jac.transpose() * r;
    return residual_scale() * r.squaredNorm();
  }

  // Normal equations per output column, [H 1]'[H 1] w = [H 1]' t.
  VectorXd normal_equation_optimum() const {
    const Eigen::Index n_hid = h_.cols(), c_out = t_.cols();
    MatrixXd a(h_.rows(), n_hid + 1);
    a << h_, MatrixXd::Ones(h_.rows(), 1);
    const MatrixXd ata = a.transpose() * a;
    const Eigen::LDLT<MatrixXd> ldlt(ata);
    VectorXd theta(dimension());
    for (Eigen::Index c = 0; c < c_out; ++c) {
      const VectorXd w = ldlt.solve(a.transpose() * t_.col(c));
      for (Eigen::Index j = 0; j < n_hid; ++j) theta[c * n_hid + j] = w[j];
      theta[c_out * n_hid + c] = w[n_hid];
    }
    return theta;
  }

 private:
  MatrixXd h_, t_;
};

struct NetDraw {
  leafscan::MlpParams params;
  leafscan::TrainingSet data;
};

// Random architecture, weights, inputs and targets.
inline NetDraw random_net(std::uint64_t seed) {
  leafscan::Rng rng(seed);
  const int n_in = 1 + static_cast<int>(rng.index(13));
  const int n_hid = 1 + static_cast<int>(rng.index(10));
  const int n_out = 1 + static_cast<int>(rng.index(5));
  const auto n = static_cast<Eigen::Index>(1 + rng.index(12));
  leafscan::MlpParams p(n_in, n_hid, n_out);
  VectorXd v = p.flatten();
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal(0.0, 1.0);
  p = leafscan::MlpParams::unflatten(v, n_in, n_hid, n_out);
  leafscan::TrainingSet data{MatrixXd(n, n_in), MatrixXd(n, n_out)};
  for (Eigen::Index i = 0; i < data.inputs.size(); ++i) data.inputs.data()[i] = rng.normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < data.targets.size(); ++i) data.targets.data()[i] = rng.uniform(-1.0, 1.0);
  return {p, data};
}

// Small standardized training problem with one-hot targets.
inline leafscan::TrainingSet blob_training_set(int n, int classes, double spacing, std::uint64_t seed) {
  const leafscan::BlobDataset b = leafscan::make_blobs(n, classes, 13, spacing, 1.0, seed);
  return {leafscan::standardize(b.features).values, leafscan::one_hot(b.labels, classes)};
}

// Blob feature table rows in the extract format.
inline std::vector<leafscan::LabeledSample> blob_samples(int n, int classes, double spacing, std::uint64_t seed) {
  const leafscan::BlobDataset b = leafscan::make_blobs(n, classes, 13, spacing, 1.0, seed);
  std::vector<leafscan::LabeledSample> out;
  for (int i = 0; i < n; ++i) {
    leafscan::LabeledSample s;
    for (std::size_t j = 0; j < leafscan::kFeatureCount; ++j) s.features[j] = b.features(i, static_cast<Eigen::Index>(j));
    const int c = b.labels[static_cast<std::size_t>(i)];
    s.label = {c, "class" + std::to_string(c)};
    s.source_id = "blob/" + std::to_string(i);
    out.push_back(std::move(s));
  }
  return out;
}

// Descent contract on a finished run: non-increasing loss, except GDX whose
// accepted steps may rise by at most the configured ratio. Returns the first
// offending epoch or -1.
inline int descent_violation(leafscan::Algorithm a, const std::vector<double>& loss, double start_loss,
                             double gdx_ratio = 1.04) {
  double prev = start_loss;
  for (std::size_t i = 0; i < loss.size(); ++i) {
    const bool ok = a == leafscan::Algorithm::GDX ? loss[i] <= gdx_ratio * prev : loss[i] <= prev;
    if (!ok) return static_cast<int>(i);
    prev = loss[i];
  }
  return -1;
}

}  // namespace fixture
