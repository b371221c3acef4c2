#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "leafscan/error.hpp"
#include "leafscan/random.hpp"

namespace leafscan {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Weights of the one-hidden-layer network: sigmoid hidden units, linear
/// outputs. The flat layout is W1 row-major, b1, W2 row-major, b2.
struct MlpParams {
  MatrixXd w1;  // hidden x inputs
  VectorXd b1;  // hidden
  MatrixXd w2;  // outputs x hidden
  VectorXd b2;  // outputs

  MlpParams() = default;
  MlpParams(int n_in, int n_hidden, int n_out)
      : w1(MatrixXd::Zero(n_hidden, n_in)),
        b1(VectorXd::Zero(n_hidden)),
        w2(MatrixXd::Zero(n_out, n_hidden)),
        b2(VectorXd::Zero(n_out)) {
    if (n_in < 1 || n_hidden < 1 || n_out < 1) throw InputError("mlp: layer sizes must be >= 1");
  }

  int n_in() const { return static_cast<int>(w1.cols()); }
  int n_hidden() const { return static_cast<int>(w1.rows()); }
  int n_out() const { return static_cast<int>(w2.rows()); }

  static Eigen::Index parameter_count(int n_in, int n_hidden, int n_out) {
    return static_cast<Eigen::Index>(n_hidden) * n_in + n_hidden +
           static_cast<Eigen::Index>(n_out) * n_hidden + n_out;
  }
  Eigen::Index parameter_count() const { return parameter_count(n_in(), n_hidden(), n_out()); }

  VectorXd flatten() const {
    VectorXd v(parameter_count());
    Eigen::Index at = 0;
    for (Eigen::Index j = 0; j < w1.rows(); ++j)
      for (Eigen::Index k = 0; k < w1.cols(); ++k) v[at++] = w1(j, k);
    for (Eigen::Index j = 0; j < b1.size(); ++j) v[at++] = b1[j];
    for (Eigen::Index c = 0; c < w2.rows(); ++c)
      for (Eigen::Index j = 0; j < w2.cols(); ++j) v[at++] = w2(c, j);
    for (Eigen::Index c = 0; c < b2.size(); ++c) v[at++] = b2[c];
    return v;
  }

  static MlpParams unflatten(const VectorXd& v, int n_in, int n_hidden, int n_out) {
    if (v.size() != parameter_count(n_in, n_hidden, n_out)) {
      throw InputError("mlp: flat parameter vector has the wrong length");
    }
    MlpParams p(n_in, n_hidden, n_out);
    Eigen::Index at = 0;
    for (Eigen::Index j = 0; j < p.w1.rows(); ++j)
      for (Eigen::Index k = 0; k < p.w1.cols(); ++k) p.w1(j, k) = v[at++];
    for (Eigen::Index j = 0; j < p.b1.size(); ++j) p.b1[j] = v[at++];
    for (Eigen::Index c = 0; c < p.w2.rows(); ++c)
      for (Eigen::Index j = 0; j < p.w2.cols(); ++j) p.w2(c, j) = v[at++];
    for (Eigen::Index c = 0; c < p.b2.size(); ++c) p.b2[c] = v[at++];
    return p;
  }

  bool finite() const {
    return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
  }
};

/// Seeded uniform [-0.5, 0.5] / sqrt(fan_in) for every weight and bias.
inline MlpParams init_params(int n_in, int n_hidden, int n_out, std::uint64_t seed) {
  MlpParams p(n_in, n_hidden, n_out);
  Rng rng(seed);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(n_in));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(n_hidden));
  VectorXd v = p.flatten();
  const Eigen::Index layer1 = static_cast<Eigen::Index>(n_hidden) * (n_in + 1);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-0.5, 0.5) * (i < layer1 ? s1 : s2);
  return MlpParams::unflatten(v, n_in, n_hidden, n_out);
}

/// Inputs (one row per sample) and one-hot targets.
struct TrainingSet {
  MatrixXd inputs;
  MatrixXd targets;

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index classes() const { return targets.cols(); }
};

inline MatrixXd one_hot(const std::vector<int>& labels, int classes) {
  MatrixXd t = MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) throw InputError("label outside class range");
    t(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return t;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline MatrixXd hidden_activations(const MlpParams& p, const MatrixXd& inputs) {
  MatrixXd z = inputs * p.w1.transpose();
  z.rowwise() += p.b1.transpose();
  return z.unaryExpr([](double v) { return sigmoid(v); });
}

/// Network outputs for every row of `inputs`.
inline MatrixXd forward(const MlpParams& p, const MatrixXd& inputs) {
  MatrixXd y = hidden_activations(p, inputs) * p.w2.transpose();
  y.rowwise() += p.b2.transpose();
  return y;
}

inline VectorXd forward(const MlpParams& p, const VectorXd& x) {
  VectorXd h = (p.w1 * x + p.b1).unaryExpr([](double v) { return sigmoid(v); });
  return p.w2 * h + p.b2;
}

/// Index of the largest output, lowest index on ties.
inline int argmax(const VectorXd& y) {
  int best = 0;
  for (Eigen::Index c = 1; c < y.size(); ++c) {
    if (y[c] > y[best]) best = static_cast<int>(c);
  }
  return best;
}

inline std::vector<int> predict(const MlpParams& p, const MatrixXd& inputs) {
  const MatrixXd y = forward(p, inputs);
  std::vector<int> out(static_cast<std::size_t>(y.rows()));
  for (Eigen::Index i = 0; i < y.rows(); ++i) out[static_cast<std::size_t>(i)] = argmax(y.row(i).transpose());
  return out;
}

/// Mean over all n*C output components of the squared error.
inline double mse_loss(const MlpParams& p, const TrainingSet& data) {
  if (data.size() == 0) throw InputError("mse_loss: empty data");
  return (forward(p, data.inputs) - data.targets).squaredNorm() /
         static_cast<double>(data.size() * data.classes());
}

/// Exact gradient of mse_loss with respect to the flat parameter vector.
inline VectorXd gradient(const MlpParams& p, const TrainingSet& data, double* loss = nullptr) {
  if (data.size() == 0) throw InputError("gradient: empty data");
  const double scale = 2.0 / static_cast<double>(data.size() * data.classes());
  const MatrixXd h = hidden_activations(p, data.inputs);
  MatrixXd r = h * p.w2.transpose();
  r.rowwise() += p.b2.transpose();
  r -= data.targets;
  if (loss) *loss = r.squaredNorm() / static_cast<double>(data.size() * data.classes());

  const MatrixXd d_out = scale * r;                      // n x C
  const MatrixXd g_w2 = d_out.transpose() * h;           // C x N
  const VectorXd g_b2 = d_out.colwise().sum().transpose();
  const MatrixXd d_hidden =
      (d_out * p.w2).cwiseProduct(h.cwiseProduct((1.0 - h.array()).matrix()));  // n x N
  const MatrixXd g_w1 = d_hidden.transpose() * data.inputs;  // N x n_in
  const VectorXd g_b1 = d_hidden.colwise().sum().transpose();

  MlpParams g(p.n_in(), p.n_hidden(), p.n_out());
  g.w1 = g_w1;
  g.b1 = g_b1;
  g.w2 = g_w2;
  g.b2 = g_b2;
  return g.flatten();
}

/// Residuals y - t stacked sample-major: entry i*C + c.
inline VectorXd residuals(const MlpParams& p, const TrainingSet& data) {
  const MatrixXd r = forward(p, data.inputs) - data.targets;
  VectorXd out(r.size());
  for (Eigen::Index i = 0; i < r.rows(); ++i)
    for (Eigen::Index c = 0; c < r.cols(); ++c) out[i * r.cols() + c] = r(i, c);
  return out;
}

/// d r_{i,c} / d theta, one row per residual in the order of residuals().
/// Writes into `jac`, reusing its storage when the shape already fits.
inline void jacobian_into(const MlpParams& p, const TrainingSet& data, MatrixXd& jac) {
  if (data.size() == 0) throw InputError("jacobian: empty data");
  const Eigen::Index n = data.size(), n_in = p.n_in(), n_hid = p.n_hidden(), n_out = p.n_out();
  const Eigen::Index off_b1 = n_hid * n_in;
  const Eigen::Index off_w2 = off_b1 + n_hid;
  const Eigen::Index off_b2 = off_w2 + n_out * n_hid;
  const MatrixXd h = hidden_activations(p, data.inputs);
  jac.setZero(n * n_out, p.parameter_count());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < n_out; ++c) {
      const Eigen::Index row = i * n_out + c;
      for (Eigen::Index j = 0; j < n_hid; ++j) {
        const double hj = h(i, j);
        const double coef = p.w2(c, j) * hj * (1.0 - hj);
        for (Eigen::Index k = 0; k < n_in; ++k) jac(row, j * n_in + k) = coef * data.inputs(i, k);
        jac(row, off_b1 + j) = coef;
        jac(row, off_w2 + c * n_hid + j) = hj;
      }
      jac(row, off_b2 + c) = 1.0;
    }
  }
}

inline MatrixXd jacobian(const MlpParams& p, const TrainingSet& data) {
  MatrixXd jac;
  jacobian_into(p, data, jac);
  return jac;
}

/// Per-column z-scores with statistics fixed at fit time. Columns with zero
/// spread are only centered.
struct Standardizer {
  VectorXd means;
  VectorXd sigmas;

  static Standardizer fit(const MatrixXd& features) {
    if (features.rows() < 2) throw InputError("standardize: need at least two rows");
    Standardizer s;
    const double n = static_cast<double>(features.rows());
    s.means = features.colwise().sum().transpose() / n;
    s.sigmas.resize(features.cols());
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      const double var = (features.col(c).array() - s.means[c]).square().sum() / n;
      const double sd = std::sqrt(var);
      s.sigmas[c] = sd > 0.0 ? sd : 1.0;
    }
    return s;
  }

  MatrixXd apply(const MatrixXd& features) const {
    if (features.cols() != means.size()) throw InputError("standardize: column count mismatch");
    MatrixXd out = features;
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      out.col(c) = (out.col(c).array() - means[c]) / sigmas[c];
    }
    return out;
  }

  VectorXd apply(const VectorXd& x) const {
    return ((x - means).array() / sigmas.array()).matrix();
  }
};

struct StandardizedFeatures {
  MatrixXd values;
  Standardizer stats;
};

inline StandardizedFeatures standardize(const MatrixXd& features) {
  Standardizer s = Standardizer::fit(features);
  return {s.apply(features), std::move(s)};
}

/// Least-squares view of the network for the trainers: loss = scale * |r|^2
/// with scale = 1 / (n C).
class MlpObjective {
 public:
  MlpObjective(const TrainingSet& data, int n_hidden)
      : data_(data),
        n_in_(static_cast<int>(data.inputs.cols())),
        n_hidden_(n_hidden),
        n_out_(static_cast<int>(data.targets.cols())) {
    if (data.size() == 0) throw InputError("training set is empty");
    if (data.targets.rows() != data.inputs.rows()) throw InputError("inputs/targets row mismatch");
  }

  Eigen::Index dimension() const { return MlpParams::parameter_count(n_in_, n_hidden_, n_out_); }
  double residual_scale() const { return 1.0 / static_cast<double>(data_.size() * data_.classes()); }
  MlpParams params(const VectorXd& theta) const { return MlpParams::unflatten(theta, n_in_, n_hidden_, n_out_); }

  double value(const VectorXd& theta) const { return mse_loss(params(theta), data_); }
  double value_and_gradient(const VectorXd& theta, VectorXd& grad) const {
    double loss = 0.0;
    grad = gradient(params(theta), data_, &loss);
    return loss;
  }
  void residuals(const VectorXd& theta, VectorXd& r) const { r = leafscan::residuals(params(theta), data_); }
  void residuals_and_jacobian(const VectorXd& theta, VectorXd& r, MatrixXd& jac) const {
    const MlpParams p = params(theta);
    r = leafscan::residuals(p, data_);
    jacobian_into(p, data_, jac);
  }

 private:
  const TrainingSet& data_;
  int n_in_;
  int n_hidden_;
  int n_out_;
};

}  // namespace leafscan
