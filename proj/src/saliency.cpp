// SPDX-License-Identifier: Apache-2.0
#include "icat/saliency.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace icat {

SaliencyMap saliency_from_builder(const ScoreGraphBuilder& builder, int target_class) {
  Tape<double> tape;
  const auto [x, scores] = builder(tape);
  const auto& s = tape.value(scores);
  if (target_class < 0 || static_cast<std::size_t>(target_class) >= s.size()) {
    throw ValidationError("saliency: target class " + std::to_string(target_class) +
                          " out of range for " + std::to_string(s.size()) + " classes");
  }
  tape.backward(tape.at(scores, 0, target_class));

  const Tensor<double>& g = tape.grad(x);
  SaliencyMap map;
  map.target_class = target_class;
  map.values = Tensor<double>(g.rows(), g.cols());
  for (std::size_t t = 0; t < g.rows(); ++t) {
    for (std::size_t j = 0; j < g.cols(); ++j) {
      const double v = g(t, j);
      if (!std::isfinite(v)) {
        throw NumericError("non-finite saliency gradient first appears at timestep " +
                           std::to_string(t));
      }
      map.values(t, j) = std::abs(v);
    }
  }
  return map;
}

SaliencyMap saliency_map(const ModelParams<double>& model, const Tensor<double>& X,
                         int target_class) {
  return saliency_from_builder(
      [&](Tape<double>& tape) {
        const auto fg = run_sequence(tape, model, X);
        return std::make_pair(fg.X, fg.scores);
      },
      target_class);
}

DecayProfile decay_profile(const SaliencyMap& map) {
  DecayProfile p;
  p.g.resize(map.values.rows());
  for (std::size_t t = 0; t < map.values.rows(); ++t) {
    double s = 0.0;
    for (std::size_t j = 0; j < map.values.cols(); ++j) {
      s += map.values(t, j) * map.values(t, j);
    }
    p.g[t] = std::sqrt(s);
  }
  return p;
}

DecayProfile decay_profile(const ModelParams<double>& model, const Tensor<double>& X,
                           int target_class) {
  return decay_profile(saliency_map(model, X, target_class));
}

void write_saliency_csv(const std::string& path, const SaliencyMap& map) {
  std::ofstream out(path);
  if (!out) throw NumericError("cannot open for writing: " + path);
  char buf[64];
  for (std::size_t t = 0; t < map.values.rows(); ++t) {
    for (std::size_t j = 0; j < map.values.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", map.values(t, j));
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw NumericError("write failed: " + path);
}

double write_saliency_pgm(const std::string& path, const SaliencyMap& map) {
  double max = 0.0;
  for (std::size_t i = 0; i < map.values.size(); ++i) max = std::max(max, map.values[i]);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NumericError("cannot open for writing: " + path);
  out << "P5\n" << map.values.cols() << " " << map.values.rows() << "\n255\n";
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    const double v = max > 0.0 ? map.values[i] / max : 0.0;
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
  }
  if (!out) throw NumericError("write failed: " + path);
  return max;
}

}  // namespace icat
