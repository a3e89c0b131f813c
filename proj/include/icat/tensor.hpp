// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "icat/errors.hpp"

namespace icat {

// Dense row-major rank-2 tensor. Vectors are 1 x n rows, scalars 1 x 1.
// A default-constructed tensor is "absent" (size 0) and is used for
// parameters an architecture variant does not own.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  Tensor(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), v_(rows * cols, T(0)) {
    if (rows == 0 || cols == 0) throw DimensionError("tensor dimensions must be positive");
  }

  static Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor(rows, cols); }

  static Tensor full(std::size_t rows, std::size_t cols, T value) {
    Tensor t(rows, cols);
    for (auto& x : t.v_) x = value;
    return t;
  }

  static Tensor of(std::initializer_list<std::initializer_list<T>> rows) {
    Tensor t(rows.size(), rows.begin()->size());
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != t.cols_) throw DimensionError("ragged initializer");
      for (T x : row) t.v_[i++] = x;
    }
    return t;
  }

  static Tensor row(std::initializer_list<T> values) {
    Tensor t(1, values.size());
    std::size_t i = 0;
    for (T x : values) t.v_[i++] = x;
    return t;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }

  T* data() { return v_.data(); }
  const T* data() const { return v_.data(); }

  T& operator()(std::size_t i, std::size_t j) { return v_[i * cols_ + j]; }
  T operator()(std::size_t i, std::size_t j) const { return v_[i * cols_ + j]; }
  T& operator[](std::size_t i) { return v_[i]; }
  T operator[](std::size_t i) const { return v_[i]; }

  void fill(T value) {
    for (auto& x : v_) x = value;
  }

  bool all_finite() const {
    for (T x : v_) {
      if (!std::isfinite(static_cast<double>(x))) return false;
    }
    return true;
  }

  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  std::string shape_str() const {
    return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
  }

  bool operator==(const Tensor& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && v_ == o.v_;
  }

  template <typename U>
  Tensor<U> cast() const {
    if (empty()) return {};
    Tensor<U> out(rows_, cols_);
    for (std::size_t i = 0; i < v_.size(); ++i) out[i] = static_cast<U>(v_[i]);
    return out;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<T> v_;
};

}  // namespace icat
