// SPDX-License-Identifier: Apache-2.0
#include "icat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "icat/parallel.hpp"

namespace icat {

double euclidean_distance(const Tensor<double>& ref, const Tensor<double>& saliency) {
  if (!ref.same_shape(saliency)) {
    throw DimensionError("euclidean_distance: shape mismatch " + ref.shape_str() + " vs " +
                         saliency.shape_str());
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    num += std::abs(ref[i] - saliency[i]);
    den += ref[i];
  }
  if (den <= 0.0) throw ValidationError("euclidean_distance: reference mask is all zero");
  return num / den;
}

double weighted_jaccard(const Tensor<double>& x_abs, const Tensor<double>& saliency) {
  if (!x_abs.same_shape(saliency)) {
    throw DimensionError("weighted_jaccard: shape mismatch " + x_abs.shape_str() + " vs " +
                         saliency.shape_str());
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x_abs.size(); ++i) {
    const double a = std::abs(x_abs[i]);
    const double b = std::abs(saliency[i]);
    num += std::min(a, b);
    den += std::max(a, b);
  }
  if (den == 0.0) return 1.0;
  return num / den;
}

std::vector<double> bucket_mass(const Tensor<double>& saliency, int n_buckets, bool* all_zero) {
  const int T = static_cast<int>(saliency.rows());
  if (n_buckets < 1 || n_buckets > T) {
    throw ValidationError("bucket_mass: need 1 <= buckets <= T");
  }
  std::vector<double> mass(n_buckets, 0.0);
  const int width = T / n_buckets;
  double total = 0.0;
  for (int t = 0; t < T; ++t) {
    const int b = std::min(t / width, n_buckets - 1);
    for (std::size_t j = 0; j < saliency.cols(); ++j) {
      mass[b] += saliency(t, j);
      total += saliency(t, j);
    }
  }
  if (all_zero) *all_zero = total == 0.0;
  if (total == 0.0) {
    std::fill(mass.begin(), mass.end(), 1.0 / n_buckets);
    return mass;
  }
  for (auto& m : mass) m /= total;
  return mass;
}

std::vector<double> bucket_mass(const SaliencyMap& map, int n_buckets, bool* all_zero) {
  return bucket_mass(map.values, n_buckets, all_zero);
}

int argmax_index(const Tensor<double>& row) {
  int best = 0;
  for (std::size_t j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = static_cast<int>(j);
  }
  return best;
}

int predict_class(const ModelParams<double>& model, const Tensor<double>& X) {
  return argmax_index(forward_scores(model, X));
}

double evaluate_accuracy(const ModelParams<double>& model, const LabeledDataset& data,
                         int workers) {
  if (data.size() == 0) throw ValidationError("evaluate_accuracy: empty dataset");
  std::vector<char> correct(data.size(), 0);
  parallel_for(data.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      correct[i] = predict_class(model, data.sample_tensor(i)) == data.labels[i];
    }
  });
  std::size_t hits = 0;
  for (char c : correct) hits += c;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

DropCurve feature_drop_eval(const ModelParams<double>& model, const LabeledDataset& test,
                            const std::vector<SaliencyMap>& maps,
                            const std::vector<double>& percent_grid, int workers) {
  if (percent_grid.empty()) throw ValidationError("feature_drop_eval: empty percent grid");
  for (double p : percent_grid) {
    if (p < 0.0 || p > 100.0) throw ValidationError("feature_drop_eval: percent out of [0, 100]");
  }
  if (maps.size() != test.size()) {
    throw ValidationError("feature_drop_eval: need one saliency map per test sample");
  }
  const std::size_t cells = static_cast<std::size_t>(test.T) * test.N;

  // Per-sample ranking, most salient first; stable sort keeps row-major
  // order among ties.
  std::vector<std::vector<std::uint32_t>> order(test.size());
  parallel_for(test.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      if (maps[i].values.size() != cells) {
        throw ValidationError("feature_drop_eval: map shape mismatch at sample " +
                              std::to_string(i));
      }
      auto& idx = order[i];
      idx.resize(cells);
      std::iota(idx.begin(), idx.end(), 0u);
      const auto& v = maps[i].values;
      std::stable_sort(idx.begin(), idx.end(),
                       [&](std::uint32_t a, std::uint32_t b) { return v[a] > v[b]; });
    }
  });

  DropCurve curve;
  for (double p : percent_grid) {
    const std::size_t drop =
        p == 0.0 ? 0 : static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(cells)));
    std::vector<char> correct(test.size(), 0);
    parallel_for(test.size(), workers, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        Tensor<double> x = test.sample_tensor(i);
        for (std::size_t k = 0; k < drop && k < cells; ++k) x[order[i][k]] = 0.0;
        correct[i] = predict_class(model, x) == test.labels[i];
      }
    });
    std::size_t hits = 0;
    for (char c : correct) hits += c;
    curve.push_back({p, static_cast<double>(hits) / static_cast<double>(test.size())});
  }
  return curve;
}

void write_metric_csv(const std::string& path, const std::vector<MetricRow>& rows) {
  std::ofstream out(path);
  if (!out) throw NumericError("cannot open for writing: " + path);
  out << "dataset,model,seed,wjac,euc,acc\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%llu,%.9g,%.9g,%.9g\n", r.dataset.c_str(),
                  r.model.c_str(), static_cast<unsigned long long>(r.seed), r.wjac, r.euc, r.acc);
    out << buf;
  }
  if (!out) throw NumericError("write failed: " + path);
}

}  // namespace icat
