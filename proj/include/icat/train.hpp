// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "icat/datagen.hpp"
#include "icat/model.hpp"
#include "icat/parallel.hpp"
#include "icat/rng.hpp"

namespace icat {

enum class OptimizerKind { kSgd, kAdam };
enum class Precision { kF64, kF32 };

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 200;
  int patience = 10;
  double min_delta = 1e-4;  // train-loss improvement that resets patience
  std::uint64_t seed = 0;
  Precision precision = Precision::kF64;
  int workers = 1;
  bool grad_clip = false;  // off by default; clipping confounds decay diagnostics
  double clip_norm = 5.0;

  void validate() const {
    if (learning_rate <= 0.0) throw ValidationError("train: learning rate must be positive");
    if (batch_size < 1) throw ValidationError("train: batch size must be >= 1");
    if (patience < 1) throw ValidationError("train: patience must be >= 1");
    if (max_epochs < 1) throw ValidationError("train: max epochs must be >= 1");
  }
};

template <typename T>
struct TrainResult {
  ModelParams<T> best_params;  // checkpoint with the best test accuracy
  std::vector<double> train_loss;
  std::vector<double> test_accuracy;
  int epochs_run = 0;
  int best_epoch = 0;
  double best_test_accuracy = 0.0;
  bool diverged = false;
  std::string divergence_note;
};

// Uniform init in [-1/sqrt(h), 1/sqrt(h)] for every tensor, each from its own
// derived stream, then the forget-gate bias is pinned to +1.
template <typename T>
ModelParams<T> init_params(const ModelSpec& spec, std::uint64_t seed) {
  auto params = zero_params<T>(spec);
  const double bound = 1.0 / std::sqrt(static_cast<double>(spec.hidden));
  std::uint64_t index = 0;
  params.visit([&](const char*, Tensor<T>& t) {
    SplitMix64 rng(derive_seed(seed, index++));
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = static_cast<T>(rng.uniform(-bound, bound));
    }
  });
  params.lstm.bf.fill(T(1));
  return params;
}

template <typename T>
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double lr, std::size_t n_tensors)
      : kind_(kind), lr_(lr), m_(n_tensors), v_(n_tensors) {}

  void step(std::vector<Tensor<T>*>& params, std::vector<Tensor<T>>& grads) {
    ++steps_;
    for (std::size_t k = 0; k < params.size(); ++k) {
      Tensor<T>& p = *params[k];
      const Tensor<T>& g = grads[k];
      if (kind_ == OptimizerKind::kSgd) {
        for (std::size_t i = 0; i < p.size(); ++i) {
          p[i] -= static_cast<T>(lr_) * g[i];
        }
        continue;
      }
      if (m_[k].empty()) {
        m_[k] = Tensor<T>(p.rows(), p.cols());
        v_[k] = Tensor<T>(p.rows(), p.cols());
      }
      const T b1 = T(0.9), b2 = T(0.999), eps = T(1e-8);
      const T bc1 = T(1) - static_cast<T>(std::pow(0.9, steps_));
      const T bc2 = T(1) - static_cast<T>(std::pow(0.999, steps_));
      for (std::size_t i = 0; i < p.size(); ++i) {
        m_[k][i] = b1 * m_[k][i] + (T(1) - b1) * g[i];
        v_[k][i] = b2 * v_[k][i] + (T(1) - b2) * g[i] * g[i];
        const T mhat = m_[k][i] / bc1;
        const T vhat = v_[k][i] / bc2;
        p[i] -= static_cast<T>(lr_) * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }

 private:
  OptimizerKind kind_;
  double lr_;
  std::vector<Tensor<T>> m_, v_;
  std::int64_t steps_ = 0;
};

template <typename T>
double evaluate_accuracy_t(const ModelParams<T>& params, const LabeledDataset& data,
                           int workers) {
  if (data.size() == 0) throw ValidationError("evaluate: empty dataset");
  std::vector<char> correct(data.size(), 0);
  parallel_for(data.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Tensor<T> x(data.T, data.N);
      const float* src = data.sample(i);
      for (std::size_t k = 0; k < x.size(); ++k) x[k] = static_cast<T>(src[k]);
      const Tensor<T> s = forward_scores(params, x);
      int best = 0;
      for (std::size_t j = 1; j < s.size(); ++j) {
        if (s[j] > s[best]) best = static_cast<int>(j);
      }
      correct[i] = best == data.labels[i];
    }
  });
  std::size_t hits = 0;
  for (char c : correct) hits += c;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

// Mini-batch cross-entropy training. Per-sample gradients inside a batch may
// be computed on parallel workers; the reduction over the batch and the
// optimizer update run on the calling thread in sample order, so results do
// not depend on the worker count.
template <typename T>
TrainResult<T> train(const ModelSpec& spec, const LabeledDataset& train_data,
                     const LabeledDataset& test_data, const TrainConfig& cfg) {
  cfg.validate();
  spec.validate();
  train_data.validate();
  test_data.validate();
  if (train_data.N != spec.input_dim || test_data.N != spec.input_dim) {
    throw ValidationError("train: dataset feature count does not match the model");
  }
  if (train_data.classes > spec.classes) {
    throw ValidationError("train: dataset has more classes than the model");
  }

  auto params = init_params<T>(spec, cfg.seed);
  std::vector<Tensor<T>*> tensors;
  params.visit([&](const char*, Tensor<T>& t) { tensors.push_back(&t); });
  Optimizer<T> opt(cfg.optimizer, cfg.learning_rate, tensors.size());

  TrainResult<T> result;
  result.best_params = params;

  std::vector<std::uint32_t> order(train_data.size());
  std::iota(order.begin(), order.end(), 0u);

  double best_loss = std::numeric_limits<double>::infinity();
  int stall = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    // Epoch shuffles use a separate index range from init_params streams.
    SplitMix64 shuffle_rng(derive_seed(cfg.seed, 0x10000u + static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    bool epoch_ok = true;
    std::string note;

    for (std::size_t start = 0; start < order.size() && epoch_ok;
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t count =
          std::min<std::size_t>(cfg.batch_size, order.size() - start);
      std::vector<std::vector<Tensor<T>>> sample_grads(count);
      std::vector<double> sample_loss(count, 0.0);
      std::vector<std::string> sample_err(count);

      parallel_for(count, cfg.workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t s = begin; s < end; ++s) {
          const std::uint32_t idx = order[start + s];
          try {
            Tensor<T> x(train_data.T, train_data.N);
            const float* src = train_data.sample(idx);
            for (std::size_t k = 0; k < x.size(); ++k) x[k] = static_cast<T>(src[k]);
            Tape<T> tape;
            const auto fg = run_sequence(tape, params, x);
            const NodeId loss = tape.ce_loss(fg.scores, train_data.labels[idx]);
            sample_loss[s] = static_cast<double>(tape.value(loss)[0]);
            tape.backward(loss);
            sample_grads[s].reserve(fg.params.size());
            for (NodeId p : fg.params) sample_grads[s].push_back(tape.grad(p));
          } catch (const NumericError& e) {
            sample_err[s] = e.what();
          }
        }
      });

      for (std::size_t s = 0; s < count; ++s) {
        if (!sample_err[s].empty()) {
          epoch_ok = false;
          note = sample_err[s];
          break;
        }
      }
      if (!epoch_ok) break;

      std::vector<Tensor<T>> batch_grad(tensors.size());
      for (std::size_t k = 0; k < tensors.size(); ++k) {
        batch_grad[k] = Tensor<T>(tensors[k]->rows(), tensors[k]->cols());
      }
      const T inv = T(1) / static_cast<T>(count);
      for (std::size_t s = 0; s < count; ++s) {
        epoch_loss += sample_loss[s];
        for (std::size_t k = 0; k < tensors.size(); ++k) {
          const auto& g = sample_grads[s][k];
          auto& acc = batch_grad[k];
          for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i] * inv;
        }
      }
      if (cfg.grad_clip) {
        double norm_sq = 0.0;
        for (const auto& g : batch_grad) {
          for (std::size_t i = 0; i < g.size(); ++i) {
            norm_sq += static_cast<double>(g[i]) * static_cast<double>(g[i]);
          }
        }
        const double norm = std::sqrt(norm_sq);
        if (norm > cfg.clip_norm) {
          const T scale = static_cast<T>(cfg.clip_norm / norm);
          for (auto& g : batch_grad) {
            for (std::size_t i = 0; i < g.size(); ++i) g[i] *= scale;
          }
        }
      }
      opt.step(tensors, batch_grad);
    }

    if (!epoch_ok || !std::isfinite(epoch_loss)) {
      result.diverged = true;
      result.divergence_note = note.empty() ? "non-finite training loss" : note;
      break;
    }

    epoch_loss /= static_cast<double>(train_data.size());
    result.train_loss.push_back(epoch_loss);
    const double acc = evaluate_accuracy_t(params, test_data, cfg.workers);
    result.test_accuracy.push_back(acc);
    result.epochs_run = epoch + 1;
    if (acc > result.best_test_accuracy) {
      result.best_test_accuracy = acc;
      result.best_epoch = epoch;
      result.best_params = params;
    }

    if (best_loss - epoch_loss >= cfg.min_delta) {
      best_loss = epoch_loss;
      stall = 0;
    } else {
      ++stall;
      if (stall >= cfg.patience) break;
    }
  }
  return result;
}

// Training log CSV: epoch, train loss, test accuracy.
inline void write_train_log(const std::string& path, const std::vector<double>& train_loss,
                            const std::vector<double>& test_accuracy) {
  std::ofstream out(path);
  if (!out) throw NumericError("cannot open for writing: " + path);
  out << "epoch,train_loss,test_acc\n";
  char buf[96];
  for (std::size_t e = 0; e < train_loss.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g\n", e, train_loss[e],
                  e < test_accuracy.size() ? test_accuracy[e] : 0.0);
    out << buf;
  }
  if (!out) throw NumericError("write failed: " + path);
}

}  // namespace icat
