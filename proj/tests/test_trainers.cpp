#include <catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "leafscan/runtime.hpp"
#include "leafscan/trainers.hpp"

using namespace leafscan;
using Catch::Matchers::WithinAbs;

namespace {

TrainerConfig config(Algorithm a, int epochs) {
  TrainerConfig cfg;
  cfg.algorithm = a;
  cfg.max_epochs = epochs;
  return cfg;
}

double training_accuracy(const MlpParams& p, const TrainingSet& data) {
  const std::vector<int> pred = predict(p, data.inputs);
  int hits = 0;
  for (Eigen::Index i = 0; i < data.size(); ++i) hits += data.targets(i, pred[static_cast<std::size_t>(i)]) == 1.0;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

// Pure-noise regression: Gaussian targets unrelated to the inputs, more
// weights than residuals.
TrainingSet noise_set(std::uint64_t seed) {
  Rng rng(seed);
  TrainingSet d{MatrixXd(24, 13), MatrixXd(24, 2)};
  for (Eigen::Index i = 0; i < d.inputs.size(); ++i) d.inputs.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < d.targets.size(); ++i) d.targets.data()[i] = rng.normal();
  return d;
}

}  // namespace

TEST_CASE("algorithm names parse and list") {
  for (Algorithm a : kAllAlgorithms) CHECK(parse_algorithm(algorithm_name(a)) == a);
  CHECK_FALSE(parse_algorithm("SGD").has_value());
  CHECK(algorithm_list() == "BR, LM, BFGS, RPROP, SCG, CGB, CGF, CGP, OSS, GDX");
}

TEST_CASE("LM solves a linear least-squares problem in at most three epochs") {
  Rng rng(4);
  MatrixXd h(40, 6), t(40, 3);
  for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = 1.0 / (1.0 + std::exp(-rng.normal()));
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.normal();
  const fixture::OutputLayerFit f(h, t);
  const VectorXd optimum = f.normal_equation_optimum();
  TrainerConfig cfg = config(Algorithm::LM, 3);
  cfg.min_gradient = 0.0;  // the gradient stop would end the run near 1e-7 before the parameters settle
  const OptimizationResult res = minimize(f, VectorXd::Zero(f.dimension()), cfg);
  CHECK(res.epochs_run <= 3);
  CHECK((res.theta - optimum).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("line-search trainers minimize the Rosenbrock function") {
  const fixture::Rosenbrock f;
  VectorXd x0(2);
  x0 << -1.2, 1.0;
  for (Algorithm a : {Algorithm::BFGS, Algorithm::SCG, Algorithm::CGB, Algorithm::CGF, Algorithm::CGP,
                      Algorithm::OSS}) {
    const OptimizationResult res = minimize(f, x0, config(a, 5000));
    INFO(algorithm_name(a) << " epochs " << res.epochs_run << " stop " << stop_reason_name(res.stop_reason));
    CHECK(f.value(res.theta) < 1e-6);
    CHECK(fixture::descent_violation(a, res.loss_history, f.value(x0)) == -1);
  }
}

TEST_CASE("LM and BR need a Jacobian") {
  const fixture::Rosenbrock f;
  CHECK_THROWS_AS(minimize(f, VectorXd::Zero(2), config(Algorithm::LM, 10)), InputError);
}

TEST_CASE("every trainer fits separable blobs and keeps its descent contract") {
  tune_allocator();
  const TrainingSet data = fixture::blob_training_set(200, 5, 8.0, 3);
  const MlpParams p0 = init_params(13, 20, 5, 11);
  const double start = mse_loss(p0, data);
  for (Algorithm a : kAllAlgorithms) {
    const TrainReport r = train(p0, data, config(a, 1000));
    INFO(algorithm_name(a) << " stop " << stop_reason_name(r.stop_reason));
    CHECK(static_cast<int>(r.loss_history.size()) == r.epochs_run);
    CHECK(training_accuracy(r.final_params, data) == 1.0);
    if (a == Algorithm::BR) continue;  // data loss of BR checked separately
    CHECK(fixture::descent_violation(a, r.loss_history, start) == -1);
  }
}

TEST_CASE("BR steps decrease the regularized objective they were taken on") {
  const TrainingSet data = fixture::blob_training_set(100, 5, 8.0, 9);
  const MlpParams p0 = init_params(13, 10, 5, 2);
  const MlpObjective f(data, 10);
  const OptimizationResult res = minimize(f, p0.flatten(), config(Algorithm::BR, 200));
  REQUIRE(res.objective_before.size() == static_cast<std::size_t>(res.epochs_run));
  for (std::size_t i = 0; i < res.objective_before.size(); ++i) CHECK(res.objective_after[i] < res.objective_before[i]);
}

TEST_CASE("GDX rejects steps that raise the loss by more than 4 percent") {
  const TrainingSet data = fixture::blob_training_set(100, 5, 4.0, 1);
  const MlpParams p0 = init_params(13, 10, 5, 1);
  TrainerConfig cfg = config(Algorithm::GDX, 500);
  cfg.gdx_lr = 5.0;  // large enough to provoke rejections
  const TrainReport r = train(p0, data, cfg);
  CHECK(fixture::descent_violation(Algorithm::GDX, r.loss_history, mse_loss(p0, data)) == -1);
  // Rejected epochs leave the loss where it was.
  bool rejected = false;
  for (std::size_t i = 1; i < r.loss_history.size(); ++i) rejected = rejected || r.loss_history[i] == r.loss_history[i - 1];
  CHECK(rejected);
}

TEST_CASE("BR hyperparameter update") {
  Rng rng(6);
  MatrixXd jac(30, 12);
  for (Eigen::Index i = 0; i < jac.size(); ++i) jac.data()[i] = rng.normal();
  VectorXd r(30), theta(12);
  for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = rng.normal();
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = rng.normal();

  const BayesianStats none = br_hyperparameter_update(jac, r, theta, 0.0, 1.0);
  CHECK(none.gamma == 12.0);
  CHECK(none.alpha == 12.0 / (2.0 * theta.squaredNorm()));
  CHECK(none.beta == (30.0 - 12.0) / (2.0 * r.squaredNorm()));

  for (double alpha : {1e-6, 0.01, 1.0, 100.0, 1e8}) {
    const BayesianStats s = br_hyperparameter_update(jac, r, theta, alpha, 0.7);
    CHECK(s.gamma >= 0.0);
    CHECK(s.gamma <= 12.0);
    // Independent trace of H^-1 for H = 2 beta J'J + 2 alpha I.
    const MatrixXd hess = 2.0 * 0.7 * jac.transpose() * jac + 2.0 * alpha * MatrixXd::Identity(12, 12);
    const double expected = 12.0 - 2.0 * alpha * hess.inverse().trace();
    CHECK_THAT(s.gamma, WithinAbs(expected, 1e-9));
  }
  CHECK_THROWS_AS(br_hyperparameter_update(jac, r, theta, -1.0, 1.0), InputError);
  CHECK_THROWS_AS(br_hyperparameter_update(jac, r, theta, 0.0, 0.0), InputError);
}

TEST_CASE("BR keeps gamma in range and shrinks weights on pure noise") {
  int smaller_norm = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TrainingSet data = noise_set(100 + seed);
    const MlpParams p0 = init_params(13, 10, 2, seed);
    const MlpObjective f(data, 10);
    const OptimizationResult br = minimize(f, p0.flatten(), config(Algorithm::BR, 300));
    const OptimizationResult lm = minimize(f, p0.flatten(), config(Algorithm::LM, 300));
    const auto p = static_cast<double>(p0.parameter_count());
    for (const BayesianStats& s : br.bayes_history) {
      CHECK(s.gamma >= 0.0);
      CHECK(s.gamma <= p);
    }
    REQUIRE(br.bayes.has_value());
    CHECK(br.bayes->gamma < p);
    CHECK(br.loss_history.back() >= lm.loss_history.back());
    if (br.theta.squaredNorm() <= lm.theta.squaredNorm()) ++smaller_norm;
    for (double mu : lm.mu_history) {
      CHECK(mu >= 1e-13);
      CHECK(mu <= 1e10);
    }
  }
  CHECK(smaller_norm >= 9);
}

TEST_CASE("goal equal to the starting loss stops before the first epoch") {
  const TrainingSet data = fixture::blob_training_set(50, 5, 8.0, 5);
  const MlpParams p0 = init_params(13, 5, 5, 5);
  for (Algorithm a : kAllAlgorithms) {
    TrainerConfig cfg = config(a, 100);
    cfg.goal = mse_loss(p0, data);
    const TrainReport r = train(p0, data, cfg);
    INFO(algorithm_name(a));
    CHECK(r.stop_reason == StopReason::Goal);
    CHECK(r.epochs_run == 0);
  }
}

TEST_CASE("training is deterministic") {
  const TrainingSet data = fixture::blob_training_set(60, 5, 6.0, 8);
  const MlpParams p0 = init_params(13, 8, 5, 8);
  for (Algorithm a : kAllAlgorithms) {
    const TrainReport x = train(p0, data, config(a, 50));
    const TrainReport y = train(p0, data, config(a, 50));
    INFO(algorithm_name(a));
    CHECK(x.loss_history == y.loss_history);
    CHECK(x.final_params.flatten() == y.final_params.flatten());
    CHECK(x.stop_reason == y.stop_reason);
  }
}

TEST_CASE("invalid training inputs") {
  const TrainingSet data = fixture::blob_training_set(20, 2, 8.0, 1);
  MlpParams p0 = init_params(13, 4, 2, 1);
  CHECK_THROWS_AS(train(p0, data, config(Algorithm::LM, 0)), InputError);
  CHECK_THROWS_AS(train(init_params(12, 4, 2, 1), data, config(Algorithm::LM, 5)), InputError);
  p0.w1(0, 0) = std::nan("");
  CHECK_THROWS_AS(train(p0, data, config(Algorithm::BFGS, 5)), InputError);
}
