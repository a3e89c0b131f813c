// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>

#include "icat/rng.hpp"
#include "icat/tensor.hpp"

namespace icat::testing {

// Central finite differences: step 1e-5, 64-bit, one coordinate at a time.
inline Tensor<double> numeric_grad(const std::function<double(const Tensor<double>&)>& f,
                                   Tensor<double> x, double step = 1e-5) {
  Tensor<double> g(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const double fp = f(x);
    x[i] = orig - step;
    const double fm = f(x);
    x[i] = orig;
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

// Relative error with an absolute floor for near-zero pairs.
inline double rel_err(double a, double b, double abs_floor = 1e-9) {
  const double d = std::abs(a - b);
  if (d <= abs_floor) return 0.0;
  return d / std::max(std::abs(a), std::abs(b));
}

inline double max_rel_err(const Tensor<double>& a, const Tensor<double>& b,
                          double abs_floor = 1e-9) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return 1e30;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, rel_err(a[i], b[i], abs_floor));
  return worst;
}

inline Tensor<double> random_tensor(std::size_t rows, std::size_t cols, SplitMix64& rng,
                                    double lo = -2.0, double hi = 2.0) {
  Tensor<double> t(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

}  // namespace icat::testing
