// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "icat/datagen.hpp"
#include "icat/model.hpp"
#include "icat/saliency.hpp"

namespace icat {

// Mask-normalized distance between a binary reference and a saliency map:
// sum_i |ref_i - R_i| / sum_i ref_i. The per-element sqrt-of-square in the
// printed formula collapses to an absolute value, so this is an L1 distance
// normalized by mask mass; it is implemented literally, not "fixed" to L2.
double euclidean_distance(const Tensor<double>& ref, const Tensor<double>& saliency);

// sum_i min(|x_i|, R_i) / sum_i max(|x_i|, R_i) over all cells, in [0, 1].
// Both inputs identically zero is defined as 1 (degenerate identity).
double weighted_jaccard(const Tensor<double>& x_abs, const Tensor<double>& saliency);

// Fraction of total saliency mass per contiguous time bucket; the last
// bucket absorbs any remainder. An all-zero map yields a uniform vector and
// sets *all_zero when provided.
std::vector<double> bucket_mass(const Tensor<double>& saliency, int n_buckets,
                                bool* all_zero = nullptr);
std::vector<double> bucket_mass(const SaliencyMap& map, int n_buckets, bool* all_zero = nullptr);

int argmax_index(const Tensor<double>& row);
int predict_class(const ModelParams<double>& model, const Tensor<double>& X);
double evaluate_accuracy(const ModelParams<double>& model, const LabeledDataset& data,
                         int workers = 1);

struct DropPoint {
  double percent = 0.0;
  double accuracy = 0.0;
};
using DropCurve = std::vector<DropPoint>;

// For each percentage p, zeroes the ceil(p% of T*N) most salient cells of
// every test sample (ranked by the supplied per-sample maps, ties broken by
// row-major cell order) and re-evaluates accuracy. Passing maps produced by
// a different model gives the cross-masking condition.
DropCurve feature_drop_eval(const ModelParams<double>& model, const LabeledDataset& test,
                            const std::vector<SaliencyMap>& maps,
                            const std::vector<double>& percent_grid, int workers = 1);

struct MetricRow {
  std::string dataset;
  std::string model;
  std::uint64_t seed = 0;
  double wjac = 0.0;
  double euc = 0.0;
  double acc = 0.0;
};

// CSV with header dataset,model,seed,wjac,euc,acc.
void write_metric_csv(const std::string& path, const std::vector<MetricRow>& rows);

}  // namespace icat
