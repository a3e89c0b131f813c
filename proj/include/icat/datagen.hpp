// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "icat/rng.hpp"
#include "icat/tensor.hpp"

namespace icat {

// One rectangle of important cells: timesteps [t0, t1), features [f0, f1).
struct BoxSpec {
  int t0 = 0, t1 = 0, f0 = 0, f1 = 0;
  double amplitude = 1.0;
  void validate(int T, int N) const;
};

enum class BoxKind {
  kEarlier,
  kMiddle,
  kLatter,
  kMixed,
  kThreeEarlier,
  kThreeMiddle,
  kThreeLatter,
  kMoving,
};

const char* box_kind_name(BoxKind kind);
BoxKind box_kind_from_name(const std::string& name);

struct DataConfig {
  int T = 100;
  int N = 100;
  double amplitude = 1.0;
  int moving_start = 0;  // kMoving: box occupies [start, start + T/5)
};

// Samples are Gaussian noise (zero mean, unit variance) with the box value
// added on important cells for the positive class (label 1) and subtracted
// for the negative class (label 0). Masks mark box cells for both classes.
struct LabeledDataset {
  int T = 0, N = 0, classes = 2;
  bool has_masks = false;
  std::vector<std::uint16_t> labels;
  std::vector<float> values;        // size() * T * N, row-major per sample
  std::vector<std::uint8_t> masks;  // same layout, 0/1 bytes, only when has_masks

  std::size_t size() const { return labels.size(); }
  const float* sample(std::size_t i) const { return values.data() + i * T * N; }
  const std::uint8_t* mask(std::size_t i) const { return masks.data() + i * T * N; }
  Tensor<double> sample_tensor(std::size_t i) const;
  Tensor<float> sample_tensor_f32(std::size_t i) const;
  Tensor<double> mask_tensor(std::size_t i) const;
  void validate() const;
};

// Box placement for a dataset kind. Positions scale with T and N; at the
// default 100 x 100 the single-box band is features [10, 40) with time
// [0, 30) / [30, 70) / [70, 100) for earlier / middle / latter. kMixed draws
// the location per sample from `rng`.
std::vector<BoxSpec> boxes_for(BoxKind kind, const DataConfig& cfg, SplitMix64* rng);

// Deterministic: sample i draws from the derived stream (seed, offset + i),
// so splits generated with disjoint offset ranges never share noise.
LabeledDataset generate_box_dataset(BoxKind kind, int n_samples, std::uint64_t seed,
                                    const DataConfig& cfg = {}, std::uint64_t sample_offset = 0);

struct DatasetSplit {
  LabeledDataset train, test;
};

DatasetSplit generate_box_split(BoxKind kind, int n_train, int n_test, std::uint64_t seed,
                                const DataConfig& cfg = {});

// Dataset container file, magic "ICTS"; layout documented in docs/formats.md.
void save_dataset(const std::string& path, const LabeledDataset& data);
LabeledDataset load_dataset(const std::string& path);

// IDX-format MNIST adapter: image rows become timesteps (time on the y-axis),
// pixels scaled to [0, 1], labels remapped to 0..k-1 in ascending digit order.
LabeledDataset load_mnist_timeseries(const std::string& images_path,
                                     const std::string& labels_path,
                                     const std::vector<int>& digits = {1, 6, 7});

}  // namespace icat
