// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <string>

#include "icat/tape.hpp"
#include "icat/tensor.hpp"

namespace icat {

// Gated cell weights. Input projections are [input_dim x h], recurrent
// projections [h x h], biases [1 x h]; a step computes row vectors, e.g.
// i = sigmoid(x*W_xi + h_prev*W_hi + b_i).
template <typename T>
struct LstmWeights {
  Tensor<T> Wxi, Wxf, Wxo, Wxc;
  Tensor<T> Whi, Whf, Who, Whc;
  Tensor<T> bi, bf, bo, bc;

  template <typename F>
  void visit(F&& f) {
    f("W_xi", Wxi); f("W_xf", Wxf); f("W_xo", Wxo); f("W_xc", Wxc);
    f("W_hi", Whi); f("W_hf", Whf); f("W_ho", Who); f("W_hc", Whc);
    f("b_i", bi); f("b_f", bf); f("b_o", bo); f("b_c", bc);
  }
  template <typename F>
  void visit(F&& f) const {
    const_cast<LstmWeights*>(this)->visit([&](const char* n, Tensor<T>& t) {
      f(n, static_cast<const Tensor<T>&>(t));
    });
  }
};

// Two-layer unbiased attention scorer: W1 is [d_a x in], W2 is [r x d_a].
template <typename T>
struct AttentionWeights {
  Tensor<T> W1, W2;
};

enum class AttentionMode { kFull, kAveraged };

template <typename T>
struct LstmNodes {
  NodeId Wxi, Wxf, Wxo, Wxc, Whi, Whf, Who, Whc, bi, bf, bo, bc;
};

template <typename T>
struct AttentionNodes {
  NodeId W1 = -1, W2 = -1;
};

template <typename T>
struct StateNodes {
  NodeId h = -1, c = -1;
};

template <typename T>
LstmNodes<T> to_tape(Tape<T>& tape, const LstmWeights<T>& w) {
  return LstmNodes<T>{tape.input(w.Wxi), tape.input(w.Wxf), tape.input(w.Wxo),
                      tape.input(w.Wxc), tape.input(w.Whi), tape.input(w.Whf),
                      tape.input(w.Who), tape.input(w.Whc), tape.input(w.bi),
                      tape.input(w.bf),  tape.input(w.bo),  tape.input(w.bc)};
}

template <typename T>
AttentionNodes<T> to_tape(Tape<T>& tape, const AttentionWeights<T>& w) {
  return AttentionNodes<T>{tape.input(w.W1), tape.input(w.W2)};
}

template <typename T>
StateNodes<T> zero_state(Tape<T>& tape, int hidden) {
  return StateNodes<T>{tape.input(Tensor<T>(1, hidden)), tape.input(Tensor<T>(1, hidden))};
}

struct GateNodes {
  NodeId input = -1, forget = -1, output = -1, candidate = -1;
};

// One gated step: i, f, o gates, candidate, cell update, hidden output.
// x is the step input row; prev holds (h, c) rows.
template <typename T>
StateNodes<T> lstm_step(Tape<T>& tape, const LstmNodes<T>& w, NodeId x, StateNodes<T> prev,
                        GateNodes* gates = nullptr) {
  auto gate_in = [&](NodeId Wx, NodeId Wh, NodeId b) {
    return tape.add(tape.add(tape.matmul(x, Wx), tape.matmul(prev.h, Wh)), b);
  };
  const NodeId i = tape.sigmoid(gate_in(w.Wxi, w.Whi, w.bi));
  const NodeId f = tape.sigmoid(gate_in(w.Wxf, w.Whf, w.bf));
  const NodeId o = tape.sigmoid(gate_in(w.Wxo, w.Who, w.bo));
  const NodeId cand = tape.tanh(gate_in(w.Wxc, w.Whc, w.bc));
  if (gates) *gates = GateNodes{i, f, o, cand};
  const NodeId c = tape.add(tape.mul(f, prev.c), tape.mul(i, cand));
  const NodeId h = tape.mul(o, tape.tanh(c));
  return StateNodes<T>{h, c};
}

struct AttendResult {
  NodeId A = -1;      // [r x w] attention weights, rows sum to 1
  NodeId M = -1;      // [r x N] weighted inputs
  NodeId m_avg = -1;  // [1 x N] hop average, averaged mode only
};

// Attention over rows [t0, t1) of X. Reference path used by tests and by the
// one-shot API; the unrolled runner shares the time-independent projection
// via attend_from_logits below.
template <typename T>
AttendResult attend(Tape<T>& tape, const AttentionNodes<T>& attn, NodeId X, int t0, int t1,
                    AttentionMode mode) {
  const NodeId Xr = tape.rows_range(X, t0, t1);
  const NodeId logits = tape.matmul(attn.W2, tape.tanh(tape.matmul(attn.W1, tape.transpose(Xr))));
  AttendResult out;
  out.A = tape.softmax_rows(logits);
  out.M = tape.matmul(out.A, Xr);
  if (mode == AttentionMode::kAveraged) out.m_avg = tape.mean_over_rows(out.M);
  return out;
}

// Shared projection of the whole sequence: logits [r x T] for X [T x N].
template <typename T>
NodeId attention_logits(Tape<T>& tape, const AttentionNodes<T>& attn, NodeId X) {
  return tape.matmul(attn.W2, tape.tanh(tape.matmul(attn.W1, tape.transpose(X))));
}

// Attention for the window [t0, t1) given the shared logits. Softmax is
// recomputed per step over exactly the visible columns.
template <typename T>
AttendResult attend_from_logits(Tape<T>& tape, NodeId logits, NodeId X, int t0, int t1,
                                AttentionMode mode) {
  AttendResult out;
  out.A = tape.softmax_rows(tape.cols_range(logits, t0, t1));
  out.M = tape.matmul_rows_range(out.A, X, t0, t1);
  if (mode == AttentionMode::kAveraged) out.m_avg = tape.mean_over_rows(out.M);
  return out;
}

// Cell-level attention step configuration living on one tape.
template <typename T>
struct CellAttentionGraph {
  AttentionNodes<T> attn;
  LstmNodes<T> lstm;
  AttentionMode mode = AttentionMode::kAveraged;
  int hops = 0;               // r
  int window = 0;             // attend over the last `window` steps; 0 = all steps so far
  bool pin_to_current = false;  // test hook: replace A with a one-hot on the newest step
  NodeId shared_logits = -1;    // optional hoisted projection for unrolled runs
};

// One input-cell attention step at 0-based step index t: attends over the
// visible window of X, embeds (flatten or hop average), then runs the gates.
template <typename T>
StateNodes<T> cell_attention_step(Tape<T>& tape, const CellAttentionGraph<T>& cfg, NodeId X,
                                  int t, StateNodes<T> prev, AttendResult* trace = nullptr) {
  const int t1 = t + 1;
  const int t0 = cfg.window > 0 ? std::max(0, t1 - cfg.window) : 0;
  AttendResult at;
  if (cfg.pin_to_current) {
    Tensor<T> onehot(cfg.hops, t1 - t0);
    for (int i = 0; i < cfg.hops; ++i) onehot(i, t1 - t0 - 1) = T(1);
    at.A = tape.input(std::move(onehot));
    at.M = tape.matmul_rows_range(at.A, X, t0, t1);
    if (cfg.mode == AttentionMode::kAveraged) at.m_avg = tape.mean_over_rows(at.M);
  } else if (cfg.shared_logits >= 0) {
    at = attend_from_logits(tape, cfg.shared_logits, X, t0, t1, cfg.mode);
  } else {
    at = attend(tape, cfg.attn, X, t0, t1, cfg.mode);
  }
  if (trace) *trace = at;
  const NodeId embed =
      cfg.mode == AttentionMode::kAveraged ? at.m_avg : tape.flatten_row(at.M);
  return lstm_step(tape, cfg.lstm, embed, prev);
}

}  // namespace icat
