// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "icat/model.hpp"

namespace icat {

// Absolute input gradient |dS_c / dx| of one class score, same shape as the
// input sample. Values are raw gradients: no smoothing, no input-weighting.
struct SaliencyMap {
  Tensor<double> values;
  int target_class = 0;
  int sample_id = -1;
};

// Per-timestep saliency magnitude: g_t = L2 norm over features of row t.
struct DecayProfile {
  std::vector<double> g;
};

// Builds a forward graph and reports (input node, scores node); lets tests
// swap in stub models for the real unrolled network.
using ScoreGraphBuilder = std::function<std::pair<NodeId, NodeId>(Tape<double>&)>;

SaliencyMap saliency_from_builder(const ScoreGraphBuilder& builder, int target_class);
SaliencyMap saliency_map(const ModelParams<double>& model, const Tensor<double>& X,
                         int target_class);

DecayProfile decay_profile(const SaliencyMap& map);
DecayProfile decay_profile(const ModelParams<double>& model, const Tensor<double>& X,
                           int target_class);

// CSV export: T rows, N comma-separated columns, 9 significant digits.
void write_saliency_csv(const std::string& path, const SaliencyMap& map);

// 8-bit grayscale PGM (P5), each map divided by its own max; returns that
// max so callers can record the normalization. An all-zero map stays zero.
double write_saliency_pgm(const std::string& path, const SaliencyMap& map);

}  // namespace icat
