// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "icat/train.hpp"
#include "support.hpp"

using namespace icat;

namespace {

double quadratic_loss(const Tensor<double>& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * p[i];
  return s;
}

Tensor<double> quadratic_grad(const Tensor<double>& p) {
  Tensor<double> g(p.rows(), p.cols());
  for (std::size_t i = 0; i < p.size(); ++i) g[i] = 2.0 * p[i];
  return g;
}

DatasetSplit small_split(BoxKind kind, double amplitude, int n_train, int n_test,
                         std::uint64_t seed, int T = 8, int N = 6) {
  DataConfig cfg;
  cfg.T = T;
  cfg.N = N;
  cfg.amplitude = amplitude;
  return generate_box_split(kind, n_train, n_test, seed, cfg);
}

ModelSpec small_lstm_spec(int N, int T, int hidden = 4) {
  ModelSpec spec;
  spec.kind = ModelKind::kLstm;
  spec.input_dim = N;
  spec.max_steps = T;
  spec.hidden = hidden;
  spec.classes = 2;
  return spec;
}

}  // namespace

TEST_CASE("one optimizer step decreases a quadratic stub loss") {
  for (OptimizerKind kind : {OptimizerKind::kSgd, OptimizerKind::kAdam}) {
    Tensor<double> p = Tensor<double>::row({1.0, -2.0, 3.0});
    const double before = quadratic_loss(p);
    Optimizer<double> opt(kind, 1e-2, 1);
    std::vector<Tensor<double>*> params = {&p};
    std::vector<Tensor<double>> grads = {quadratic_grad(p)};
    opt.step(params, grads);
    CHECK(quadratic_loss(p) < before);
  }
}

TEST_CASE("first adam step matches a hand-rolled scalar recurrence") {
  const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (double g : {3.0, -0.25, 1e-4, -7.5}) {
    Tensor<double> p = Tensor<double>::row({1.0});
    Optimizer<double> opt(OptimizerKind::kAdam, lr, 1);
    std::vector<Tensor<double>*> params = {&p};
    std::vector<Tensor<double>> grads = {Tensor<double>::row({g})};
    opt.step(params, grads);

    // scalar oracle
    const double m = (1 - b1) * g;
    const double v = (1 - b2) * g * g;
    const double mhat = m / (1 - b1);
    const double vhat = v / (1 - b2);
    const double expected = 1.0 - lr * mhat / (std::sqrt(vhat) + eps);
    CHECK(p[0] == doctest::Approx(expected).epsilon(1e-12));
    // the first step is close to a pure sign step of size lr
    CHECK(std::abs((1.0 - p[0]) - lr * (g > 0 ? 1.0 : -1.0)) <= lr * 1e-3);
  }
}

TEST_CASE("init_params is deterministic, bounded, and opens the forget gate") {
  ModelSpec spec = small_lstm_spec(6, 8);
  const auto a = init_params<double>(spec, 5);
  const auto b = init_params<double>(spec, 5);
  bool equal = true;
  a.visit([&](const char* name, const Tensor<double>& t) {
    b.visit([&](const char* bname, const Tensor<double>& u) {
      if (std::string(name) == bname) equal = equal && t == u;
    });
  });
  CHECK(equal);

  const auto c = init_params<double>(spec, 6);
  CHECK(!(c.lstm.Wxi == a.lstm.Wxi));

  const double bound = 1.0 / std::sqrt(4.0);
  a.visit([&](const char* name, const Tensor<double>& t) {
    if (std::string(name) == "b_f") return;
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(std::abs(t[i]) <= bound);
    }
  });
  for (std::size_t i = 0; i < a.lstm.bf.size(); ++i) CHECK(a.lstm.bf[i] == 1.0);

  // Monte Carlo: with the +1 bias the mean forget activation sits above 1/2
  SplitMix64 rng(17);
  double mean_f = 0.0;
  const int trials = 1000;
  for (int trial = 0; trial < trials; ++trial) {
    Tensor<double> x(1, 6);
    for (int j = 0; j < 6; ++j) x(0, j) = rng.gaussian();
    for (int j = 0; j < 4; ++j) {
      double acc = a.lstm.bf(0, j);
      for (int k = 0; k < 6; ++k) acc += x(0, k) * a.lstm.Wxf(k, j);
      mean_f += 1.0 / (1.0 + std::exp(-acc));
    }
  }
  mean_f /= trials * 4.0;
  CHECK(mean_f > 0.5);
}

TEST_CASE("training is reproducible and independent of the worker count") {
  auto split = small_split(BoxKind::kEarlier, 1.0, 40, 16, 7);
  ModelSpec spec = small_lstm_spec(6, 8);
  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.batch_size = 8;
  cfg.seed = 3;

  const auto r1 = train<double>(spec, split.train, split.test, cfg);
  const auto r2 = train<double>(spec, split.train, split.test, cfg);
  cfg.workers = 2;
  const auto r3 = train<double>(spec, split.train, split.test, cfg);

  CHECK(r1.train_loss == r2.train_loss);
  CHECK(r1.train_loss == r3.train_loss);
  CHECK(r1.test_accuracy == r3.test_accuracy);
  bool same = true;
  r1.best_params.visit([&](const char* name, const Tensor<double>& t) {
    r3.best_params.visit([&](const char* other, const Tensor<double>& u) {
      if (std::string(name) == other) same = same && t == u;
    });
  });
  CHECK(same);
}

TEST_CASE("an amplitude-zero dataset trains to chance accuracy") {
  auto split = small_split(BoxKind::kEarlier, 0.0, 160, 80, 21);
  ModelSpec spec = small_lstm_spec(6, 8);
  TrainConfig cfg;
  cfg.max_epochs = 8;
  cfg.patience = 3;
  cfg.seed = 2;
  cfg.workers = 2;
  const auto result = train<double>(spec, split.train, split.test, cfg);
  CHECK(result.best_test_accuracy >= 0.40);
  CHECK(result.best_test_accuracy <= 0.60);
}

TEST_CASE("an easy labelled dataset is learnable to high accuracy") {
  // strong amplitude, late box: a small lstm should separate the classes
  auto split = small_split(BoxKind::kLatter, 3.0, 120, 60, 31, 8, 10);
  ModelSpec spec = small_lstm_spec(10, 8);
  TrainConfig cfg;
  cfg.max_epochs = 40;
  cfg.patience = 8;
  cfg.seed = 4;
  cfg.workers = 2;
  const auto result = train<double>(spec, split.train, split.test, cfg);
  CHECK(result.best_test_accuracy >= 0.95);
  CHECK(evaluate_accuracy_t(result.best_params, split.test, 2) == result.best_test_accuracy);
}

TEST_CASE("non-finite activations abort training with a divergence report") {
  auto split = small_split(BoxKind::kEarlier, 1.0, 24, 8, 9);
  // Legal float32 data can carry magnitudes whose gate sums overflow in f32
  // while the f64 path survives them.
  for (int k = 0; k < 8 * 6; ++k) split.train.values[k] = 3.0e38f;
  ModelSpec spec = small_lstm_spec(6, 8);
  TrainConfig cfg;
  cfg.max_epochs = 4;
  cfg.batch_size = 8;
  cfg.precision = Precision::kF32;
  const auto r32 = train<float>(spec, split.train, split.test, cfg);
  CHECK(r32.diverged);
  CHECK_FALSE(r32.divergence_note.empty());
  CHECK(r32.epochs_run < 4);

  const auto r64 = train<double>(spec, split.train, split.test, cfg);
  CHECK_FALSE(r64.diverged);
}

TEST_CASE("train validates its configuration and dataset") {
  auto split = small_split(BoxKind::kEarlier, 1.0, 8, 4, 11);
  ModelSpec spec = small_lstm_spec(6, 8);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(train<double>(spec, split.train, split.test, cfg), ValidationError);
  TrainConfig ok;
  ModelSpec wrong = small_lstm_spec(5, 8);
  CHECK_THROWS_AS(train<double>(wrong, split.train, split.test, ok), ValidationError);
}

TEST_CASE("float32 training runs behind the precision switch") {
  auto split = small_split(BoxKind::kLatter, 2.0, 40, 20, 13);
  ModelSpec spec = small_lstm_spec(6, 8);
  TrainConfig cfg;
  cfg.max_epochs = 4;
  cfg.precision = Precision::kF32;
  cfg.seed = 8;
  const auto result = train<float>(spec, split.train, split.test, cfg);
  CHECK(result.epochs_run == 4);
  for (double l : result.train_loss) CHECK(std::isfinite(l));
  // converting the checkpoint to doubles keeps it usable downstream
  const auto as_double = result.best_params.cast<double>();
  CHECK(evaluate_accuracy_t(as_double, split.test, 1) >= 0.4);
}
