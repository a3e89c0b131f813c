// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "icat/errors.hpp"
#include "icat/tensor.hpp"

namespace icat {

using NodeId = std::int32_t;

enum class Op : std::uint8_t {
  kLeaf,
  kMatMul,
  kMatMulRowsRange,  // a [r x (r1-r0)] times rows [r0, r1) of x, without materializing the slice
  kAdd,
  kSub,
  kMul,
  kNeg,
  kAbs,
  kSigmoid,
  kTanh,
  kExp,
  kLog,
  kAddRowVec,  // [m x n] + [1 x n], the one explicit broadcasting op
  kSoftmaxRows,
  kRowsRange,
  kColsRange,
  kTranspose,
  kReshape,
  kMeanOverRows,  // column-wise: [m x n] -> [1 x n], sum over rows then divide once
  kMaxOverRows,   // column-wise max, first index wins ties
  kStackRows,     // k tensors [1 x n] -> [k x n]
  kSumAll,
  kAt,      // select one element -> [1 x 1]
  kCeLoss,  // cross-entropy of a [1 x C] score row against an integer label
};

const char* op_name(Op op);

// Dynamic tape: nodes are appended in topological order during the forward
// pass, so reverse iteration is a valid reverse-topological traversal.
// Every forward result is checked for NaN/Inf and surfaced as NumericError.
// A tape is confined to one worker; no internal synchronization.
template <typename T>
class Tape {
 public:
  struct Node {
    Op op;
    NodeId a = -1, b = -1;
    std::vector<NodeId> stacked;  // kStackRows parents
    int i0 = 0, i1 = 0;           // op-specific: ranges, label, element coords
    Tensor<T> val;
    Tensor<T> grad;
    std::vector<std::int32_t> arg_rows;  // kMaxOverRows winner per column
  };

  using EMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using EMap = Eigen::Map<EMat>;
  using ECMap = Eigen::Map<const EMat>;

  static ECMap cmap(const Tensor<T>& t) { return ECMap(t.data(), t.rows(), t.cols()); }
  static EMap map(Tensor<T>& t) { return EMap(t.data(), t.rows(), t.cols()); }

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }

  const Tensor<T>& value(NodeId id) const { return nodes_[id].val; }
  const Tensor<T>& grad(NodeId id) const { return nodes_[id].grad; }
  const Node& node(NodeId id) const { return nodes_[id]; }

  NodeId input(Tensor<T> v) {
    if (v.empty()) throw DimensionError("input tensor is empty");
    if (!v.all_finite()) throw NumericError("non-finite value in input tensor");
    return push(Op::kLeaf, -1, -1, std::move(v));
  }

  NodeId matmul(NodeId a, NodeId b) {
    const auto& A = nodes_[a].val;
    const auto& B = nodes_[b].val;
    if (A.cols() != B.rows()) {
      throw DimensionError("matmul: inner dimensions disagree, " + A.shape_str() + " vs " +
                           B.shape_str());
    }
    Tensor<T> out(A.rows(), B.cols());
    map(out).noalias() = cmap(A) * cmap(B);
    return push(Op::kMatMul, a, b, std::move(out));
  }

  // a times rows [r0, r1) of x.
  NodeId matmul_rows_range(NodeId a, NodeId x, int r0, int r1) {
    const auto& A = nodes_[a].val;
    const auto& X = nodes_[x].val;
    check_row_range(X, r0, r1);
    if (A.cols() != static_cast<std::size_t>(r1 - r0)) {
      throw DimensionError("matmul_rows_range: inner dimensions disagree, " + A.shape_str() +
                           " vs " + std::to_string(r1 - r0) + " rows");
    }
    Tensor<T> out(A.rows(), X.cols());
    map(out).noalias() = cmap(A) * cmap(X).middleRows(r0, r1 - r0);
    NodeId id = push(Op::kMatMulRowsRange, a, x, std::move(out));
    nodes_[id].i0 = r0;
    nodes_[id].i1 = r1;
    return id;
  }

  NodeId add(NodeId a, NodeId b) { return binary(Op::kAdd, a, b); }
  NodeId sub(NodeId a, NodeId b) { return binary(Op::kSub, a, b); }
  NodeId mul(NodeId a, NodeId b) { return binary(Op::kMul, a, b); }

  NodeId neg(NodeId a) {
    return unary(Op::kNeg, a, [](T x) { return -x; });
  }
  NodeId abs(NodeId a) {
    return unary(Op::kAbs, a, [](T x) { return std::abs(x); });
  }
  NodeId sigmoid(NodeId a) {
    return unary(Op::kSigmoid, a, [](T x) { return T(1) / (T(1) + std::exp(-x)); });
  }
  NodeId tanh(NodeId a) {
    return unary(Op::kTanh, a, [](T x) { return std::tanh(x); });
  }
  NodeId exp(NodeId a) {
    return unary(Op::kExp, a, [](T x) { return std::exp(x); });
  }
  NodeId log(NodeId a) {
    return unary(Op::kLog, a, [](T x) { return std::log(x); });
  }

  NodeId add_rowvec(NodeId a, NodeId b) {
    const auto& A = nodes_[a].val;
    const auto& B = nodes_[b].val;
    if (B.rows() != 1 || B.cols() != A.cols()) {
      throw DimensionError("add_rowvec: want [m x n] + [1 x n], got " + A.shape_str() + " + " +
                           B.shape_str());
    }
    Tensor<T> out(A.rows(), A.cols());
    for (std::size_t i = 0; i < A.rows(); ++i) {
      for (std::size_t j = 0; j < A.cols(); ++j) out(i, j) = A(i, j) + B(0, j);
    }
    return push(Op::kAddRowVec, a, b, std::move(out));
  }

  // Row-wise softmax with per-row max subtraction.
  NodeId softmax_rows(NodeId a) {
    const auto& A = nodes_[a].val;
    Tensor<T> out(A.rows(), A.cols());
    for (std::size_t i = 0; i < A.rows(); ++i) {
      T m = A(i, 0);
      for (std::size_t j = 1; j < A.cols(); ++j) m = std::max(m, A(i, j));
      T sum = T(0);
      for (std::size_t j = 0; j < A.cols(); ++j) {
        out(i, j) = std::exp(A(i, j) - m);
        sum += out(i, j);
      }
      for (std::size_t j = 0; j < A.cols(); ++j) out(i, j) /= sum;
    }
    return push(Op::kSoftmaxRows, a, -1, std::move(out));
  }

  NodeId rows_range(NodeId a, int r0, int r1) {
    const auto& A = nodes_[a].val;
    check_row_range(A, r0, r1);
    Tensor<T> out(r1 - r0, A.cols());
    map(out) = cmap(A).middleRows(r0, r1 - r0);
    NodeId id = push(Op::kRowsRange, a, -1, std::move(out));
    nodes_[id].i0 = r0;
    nodes_[id].i1 = r1;
    return id;
  }

  NodeId cols_range(NodeId a, int c0, int c1) {
    const auto& A = nodes_[a].val;
    if (c0 < 0 || c1 <= c0 || static_cast<std::size_t>(c1) > A.cols()) {
      throw DimensionError("cols_range: bad range [" + std::to_string(c0) + ", " +
                           std::to_string(c1) + ") for " + A.shape_str());
    }
    Tensor<T> out(A.rows(), c1 - c0);
    map(out) = cmap(A).middleCols(c0, c1 - c0);
    NodeId id = push(Op::kColsRange, a, -1, std::move(out));
    nodes_[id].i0 = c0;
    nodes_[id].i1 = c1;
    return id;
  }

  NodeId transpose(NodeId a) {
    const auto& A = nodes_[a].val;
    Tensor<T> out(A.cols(), A.rows());
    map(out) = cmap(A).transpose();
    return push(Op::kTranspose, a, -1, std::move(out));
  }

  NodeId reshape(NodeId a, std::size_t rows, std::size_t cols) {
    const auto& A = nodes_[a].val;
    if (rows * cols != A.size()) {
      throw DimensionError("reshape: size mismatch, " + A.shape_str() + " to [" +
                           std::to_string(rows) + "x" + std::to_string(cols) + "]");
    }
    Tensor<T> out(rows, cols);
    std::copy(A.data(), A.data() + A.size(), out.data());
    NodeId id = push(Op::kReshape, a, -1, std::move(out));
    nodes_[id].i0 = static_cast<int>(rows);
    nodes_[id].i1 = static_cast<int>(cols);
    return id;
  }

  NodeId flatten_row(NodeId a) { return reshape(a, 1, nodes_[a].val.size()); }

  NodeId mean_over_rows(NodeId a) {
    const auto& A = nodes_[a].val;
    Tensor<T> out(1, A.cols());
    for (std::size_t i = 0; i < A.rows(); ++i) {
      for (std::size_t j = 0; j < A.cols(); ++j) out(0, j) += A(i, j);
    }
    const T inv = T(1) / static_cast<T>(A.rows());
    for (std::size_t j = 0; j < A.cols(); ++j) out(0, j) *= inv;
    return push(Op::kMeanOverRows, a, -1, std::move(out));
  }

  NodeId max_over_rows(NodeId a) {
    const auto& A = nodes_[a].val;
    Tensor<T> out(1, A.cols());
    std::vector<std::int32_t> arg(A.cols(), 0);
    for (std::size_t j = 0; j < A.cols(); ++j) {
      T best = A(0, j);
      for (std::size_t i = 1; i < A.rows(); ++i) {
        if (A(i, j) > best) {
          best = A(i, j);
          arg[j] = static_cast<std::int32_t>(i);
        }
      }
      out(0, j) = best;
    }
    NodeId id = push(Op::kMaxOverRows, a, -1, std::move(out));
    nodes_[id].arg_rows = std::move(arg);
    return id;
  }

  NodeId stack_rows(std::span<const NodeId> parts) {
    if (parts.empty()) throw DimensionError("stack_rows: no inputs");
    const std::size_t n = nodes_[parts[0]].val.cols();
    Tensor<T> out(parts.size(), n);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const auto& P = nodes_[parts[i]].val;
      if (P.rows() != 1 || P.cols() != n) {
        throw DimensionError("stack_rows: expected [1x" + std::to_string(n) + "], got " +
                             P.shape_str());
      }
      for (std::size_t j = 0; j < n; ++j) out(i, j) = P(0, j);
    }
    NodeId id = push(Op::kStackRows, -1, -1, std::move(out));
    nodes_[id].stacked.assign(parts.begin(), parts.end());
    return id;
  }

  NodeId sum_all(NodeId a) {
    const auto& A = nodes_[a].val;
    Tensor<T> out(1, 1);
    T s = T(0);
    for (std::size_t i = 0; i < A.size(); ++i) s += A[i];
    out[0] = s;
    return push(Op::kSumAll, a, -1, std::move(out));
  }

  NodeId at(NodeId a, int i, int j) {
    const auto& A = nodes_[a].val;
    if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= A.rows() ||
        static_cast<std::size_t>(j) >= A.cols()) {
      throw DimensionError("at: index out of range for " + A.shape_str());
    }
    Tensor<T> out(1, 1);
    out[0] = A(i, j);
    NodeId id = push(Op::kAt, a, -1, std::move(out));
    nodes_[id].i0 = i;
    nodes_[id].i1 = j;
    return id;
  }

  // Numerically stable -log softmax(scores)[label]; fused forward and backward.
  NodeId ce_loss(NodeId scores, int label) {
    const auto& S = nodes_[scores].val;
    if (S.rows() != 1) throw DimensionError("ce_loss: scores must be a row, got " + S.shape_str());
    if (label < 0 || static_cast<std::size_t>(label) >= S.cols()) {
      throw ValidationError("ce_loss: label out of range");
    }
    T m = S(0, 0);
    for (std::size_t j = 1; j < S.cols(); ++j) m = std::max(m, S(0, j));
    T sum = T(0);
    for (std::size_t j = 0; j < S.cols(); ++j) sum += std::exp(S(0, j) - m);
    Tensor<T> out(1, 1);
    out[0] = m + std::log(sum) - S(0, label);
    NodeId id = push(Op::kCeLoss, scores, -1, std::move(out));
    nodes_[id].i0 = label;
    return id;
  }

  // Reverse accumulation from a scalar root. Gradients of shared nodes sum
  // over all uses; unreachable nodes keep an empty gradient.
  void backward(NodeId root, T seed = T(1)) {
    if (root < 0 || static_cast<std::size_t>(root) >= nodes_.size()) {
      throw std::logic_error("backward: bad root id");
    }
    if (nodes_[root].val.size() != 1) {
      throw std::logic_error("backward: root must be scalar, got " +
                             nodes_[root].val.shape_str());
    }
    std::vector<char> reach(nodes_.size(), 0);
    std::vector<NodeId> stack{root};
    reach[root] = 1;
    while (!stack.empty()) {
      const Node& n = nodes_[stack.back()];
      stack.pop_back();
      for (NodeId p : {n.a, n.b}) {
        if (p >= 0 && !reach[p]) {
          reach[p] = 1;
          stack.push_back(p);
        }
      }
      for (NodeId p : n.stacked) {
        if (!reach[p]) {
          reach[p] = 1;
          stack.push_back(p);
        }
      }
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (reach[i]) {
        nodes_[i].grad = Tensor<T>(nodes_[i].val.rows(), nodes_[i].val.cols());
      } else {
        nodes_[i].grad = Tensor<T>();
      }
    }
    nodes_[root].grad[0] = seed;
    for (NodeId id = root; id >= 0; --id) {
      if (reach[id]) propagate(id);
    }
  }

 private:
  std::vector<Node> nodes_;

  NodeId push(Op op, NodeId a, NodeId b, Tensor<T> val) {
    if (op != Op::kLeaf && !val.all_finite()) {
      throw NumericError(std::string("non-finite value produced by ") + op_name(op));
    }
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.val = std::move(val);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  NodeId binary(Op op, NodeId a, NodeId b) {
    const auto& A = nodes_[a].val;
    const auto& B = nodes_[b].val;
    if (!A.same_shape(B)) {
      throw DimensionError(std::string(op_name(op)) + ": shape mismatch " + A.shape_str() +
                           " vs " + B.shape_str());
    }
    Tensor<T> out(A.rows(), A.cols());
    switch (op) {
      case Op::kAdd:
        for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] + B[i];
        break;
      case Op::kSub:
        for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] - B[i];
        break;
      case Op::kMul:
        for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] * B[i];
        break;
      default:
        throw std::logic_error("binary: bad op");
    }
    return push(op, a, b, std::move(out));
  }

  template <typename F>
  NodeId unary(Op op, NodeId a, F f) {
    const auto& A = nodes_[a].val;
    Tensor<T> out(A.rows(), A.cols());
    for (std::size_t i = 0; i < A.size(); ++i) out[i] = f(A[i]);
    return push(op, a, -1, std::move(out));
  }

  static void check_row_range(const Tensor<T>& t, int r0, int r1) {
    if (r0 < 0 || r1 <= r0 || static_cast<std::size_t>(r1) > t.rows()) {
      throw DimensionError("bad row range [" + std::to_string(r0) + ", " + std::to_string(r1) +
                           ") for " + t.shape_str());
    }
  }

  Tensor<T>& g(NodeId id) { return nodes_[id].grad; }

  void propagate(NodeId id) {
    Node& n = nodes_[id];
    const Tensor<T>& gy = n.grad;
    switch (n.op) {
      case Op::kLeaf:
        return;
      case Op::kMatMul: {
        const auto& A = nodes_[n.a].val;
        const auto& B = nodes_[n.b].val;
        map(g(n.a)).noalias() += cmap(gy) * cmap(B).transpose();
        map(g(n.b)).noalias() += cmap(A).transpose() * cmap(gy);
        return;
      }
      case Op::kMatMulRowsRange: {
        const auto& A = nodes_[n.a].val;
        const auto& X = nodes_[n.b].val;
        const int r0 = n.i0, len = n.i1 - n.i0;
        map(g(n.a)).noalias() += cmap(gy) * cmap(X).middleRows(r0, len).transpose();
        map(g(n.b)).middleRows(r0, len).noalias() += cmap(A).transpose() * cmap(gy);
        return;
      }
      case Op::kAdd: {
        accumulate(n.a, gy);
        accumulate(n.b, gy);
        return;
      }
      case Op::kSub: {
        accumulate(n.a, gy);
        auto& gb = g(n.b);
        for (std::size_t i = 0; i < gy.size(); ++i) gb[i] -= gy[i];
        return;
      }
      case Op::kMul: {
        const auto& A = nodes_[n.a].val;
        const auto& B = nodes_[n.b].val;
        auto& ga = g(n.a);
        auto& gb = g(n.b);
        for (std::size_t i = 0; i < gy.size(); ++i) {
          ga[i] += gy[i] * B[i];
          gb[i] += gy[i] * A[i];
        }
        return;
      }
      case Op::kNeg: {
        auto& ga = g(n.a);
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] -= gy[i];
        return;
      }
      case Op::kAbs: {
        const auto& A = nodes_[n.a].val;
        auto& ga = g(n.a);
        for (std::size_t i = 0; i < gy.size(); ++i) {
          ga[i] += gy[i] * (A[i] > T(0) ? T(1) : (A[i] < T(0) ? T(-1) : T(0)));
        }
        return;
      }
      case Op::kSigmoid: {
        const auto& Y = n.val;
        auto& ga = g(n.a);
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * Y[i] * (T(1) - Y[i]);
        return;
      }
      case Op::kTanh: {
        const auto& Y = n.val;
        auto& ga = g(n.a);
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * (T(1) - Y[i] * Y[i]);
        return;
      }
      case Op::kExp: {
        const auto& Y = n.val;
        auto& ga = g(n.a);
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * Y[i];
        return;
      }
      case Op::kLog: {
        const auto& A = nodes_[n.a].val;
        auto& ga = g(n.a);
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] / A[i];
        return;
      }
      case Op::kAddRowVec: {
        accumulate(n.a, gy);
        auto& gb = g(n.b);
        for (std::size_t i = 0; i < gy.rows(); ++i) {
          for (std::size_t j = 0; j < gy.cols(); ++j) gb(0, j) += gy(i, j);
        }
        return;
      }
      case Op::kSoftmaxRows: {
        const auto& Y = n.val;
        auto& ga = g(n.a);
        for (std::size_t i = 0; i < Y.rows(); ++i) {
          T dot = T(0);
          for (std::size_t j = 0; j < Y.cols(); ++j) dot += gy(i, j) * Y(i, j);
          for (std::size_t j = 0; j < Y.cols(); ++j) {
            ga(i, j) += (gy(i, j) - dot) * Y(i, j);
          }
        }
        return;
      }
      case Op::kRowsRange: {
        map(g(n.a)).middleRows(n.i0, n.i1 - n.i0) += cmap(gy);
        return;
      }
      case Op::kColsRange: {
        map(g(n.a)).middleCols(n.i0, n.i1 - n.i0) += cmap(gy);
        return;
      }
      case Op::kTranspose: {
        map(g(n.a)) += cmap(gy).transpose();
        return;
      }
      case Op::kReshape: {
        auto& ga = g(n.a);
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
        return;
      }
      case Op::kMeanOverRows: {
        auto& ga = g(n.a);
        const T inv = T(1) / static_cast<T>(ga.rows());
        for (std::size_t i = 0; i < ga.rows(); ++i) {
          for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += gy(0, j) * inv;
        }
        return;
      }
      case Op::kMaxOverRows: {
        auto& ga = g(n.a);
        for (std::size_t j = 0; j < gy.cols(); ++j) ga(n.arg_rows[j], j) += gy(0, j);
        return;
      }
      case Op::kStackRows: {
        for (std::size_t i = 0; i < n.stacked.size(); ++i) {
          auto& gp = g(n.stacked[i]);
          for (std::size_t j = 0; j < gy.cols(); ++j) gp(0, j) += gy(i, j);
        }
        return;
      }
      case Op::kSumAll: {
        auto& ga = g(n.a);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[0];
        return;
      }
      case Op::kAt: {
        g(n.a)(n.i0, n.i1) += gy[0];
        return;
      }
      case Op::kCeLoss: {
        const auto& S = nodes_[n.a].val;
        auto& ga = g(n.a);
        T m = S(0, 0);
        for (std::size_t j = 1; j < S.cols(); ++j) m = std::max(m, S(0, j));
        T sum = T(0);
        for (std::size_t j = 0; j < S.cols(); ++j) sum += std::exp(S(0, j) - m);
        for (std::size_t j = 0; j < S.cols(); ++j) {
          const T p = std::exp(S(0, j) - m) / sum;
          ga(0, j) += gy[0] * (p - (static_cast<int>(j) == n.i0 ? T(1) : T(0)));
        }
        return;
      }
    }
    throw std::logic_error("propagate: bad op");
  }

  void accumulate(NodeId target, const Tensor<T>& gy) {
    auto& gt = g(target);
    for (std::size_t i = 0; i < gy.size(); ++i) gt[i] += gy[i];
  }
};

inline const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kMatMul: return "matmul";
    case Op::kMatMulRowsRange: return "matmul_rows_range";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kNeg: return "neg";
    case Op::kAbs: return "abs";
    case Op::kSigmoid: return "sigmoid";
    case Op::kTanh: return "tanh";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kAddRowVec: return "add_rowvec";
    case Op::kSoftmaxRows: return "softmax_rows";
    case Op::kRowsRange: return "rows_range";
    case Op::kColsRange: return "cols_range";
    case Op::kTranspose: return "transpose";
    case Op::kReshape: return "reshape";
    case Op::kMeanOverRows: return "mean_over_rows";
    case Op::kMaxOverRows: return "max_over_rows";
    case Op::kStackRows: return "stack_rows";
    case Op::kSumAll: return "sum_all";
    case Op::kAt: return "at";
    case Op::kCeLoss: return "ce_loss";
  }
  return "?";
}

}  // namespace icat
