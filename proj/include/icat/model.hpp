// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "icat/cells.hpp"
#include "icat/tape.hpp"

namespace icat {

enum class ModelKind : std::uint16_t {
  kLstm = 0,
  kLstmInCell = 1,
  kLstmSelfAttn = 2,
  kLstmMaxPool = 3,
  kLstmMeanPool = 4,
  kLstmInCellPartial = 5,
};

enum class HeadKind { kLastHidden, kMaxPool, kMeanPool, kSelfAttention };

const char* model_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

struct ModelSpec {
  ModelKind kind = ModelKind::kLstm;
  int input_dim = 0;  // N
  int max_steps = 0;  // T
  int hidden = 64;
  int attn_dim = 50;   // d_a
  int hops = 10;       // r
  int head_hops = 10;  // hops of the self-attention head
  int classes = 2;
  AttentionMode mode = AttentionMode::kAveraged;
  int partial_window = 0;  // window for kLstmInCellPartial

  bool cell_attention() const {
    return kind == ModelKind::kLstmInCell || kind == ModelKind::kLstmInCellPartial;
  }

  HeadKind head() const {
    switch (kind) {
      case ModelKind::kLstmSelfAttn: return HeadKind::kSelfAttention;
      case ModelKind::kLstmMaxPool: return HeadKind::kMaxPool;
      case ModelKind::kLstmMeanPool: return HeadKind::kMeanPool;
      default: return HeadKind::kLastHidden;
    }
  }

  int cell_input_dim() const {
    if (!cell_attention()) return input_dim;
    return mode == AttentionMode::kAveraged ? input_dim : hops * input_dim;
  }

  int head_dim() const {
    return head() == HeadKind::kSelfAttention ? head_hops * hidden : hidden;
  }

  void validate() const {
    if (input_dim < 1 || max_steps < 1 || hidden < 1 || classes < 2) {
      throw ValidationError("model spec: dimensions must be positive and classes >= 2");
    }
    if (cell_attention() && (attn_dim < 1 || hops < 1)) {
      throw ValidationError("model spec: attention needs d_a >= 1 and hops >= 1");
    }
    if (head() == HeadKind::kSelfAttention && (attn_dim < 1 || head_hops < 1)) {
      throw ValidationError("model spec: self-attention head needs d_a >= 1 and hops >= 1");
    }
    if (kind == ModelKind::kLstmInCellPartial && partial_window < 1) {
      throw ValidationError("model spec: partial attention needs a window >= 1");
    }
  }
};

// All trainable tensors of one architecture variant. Unused tensors stay
// empty and are skipped by visit(); visit order is the serialization order.
template <typename T>
struct ModelParams {
  ModelSpec spec;
  AttentionWeights<T> cell_attn;
  LstmWeights<T> lstm;
  AttentionWeights<T> head_attn;
  Tensor<T> W_out, b_out;

  template <typename F>
  void visit(F&& f) {
    if (spec.cell_attention()) {
      f("attn_W1", cell_attn.W1);
      f("attn_W2", cell_attn.W2);
    }
    lstm.visit(f);
    if (spec.head() == HeadKind::kSelfAttention) {
      f("head_W1", head_attn.W1);
      f("head_W2", head_attn.W2);
    }
    f("W_out", W_out);
    f("b_out", b_out);
  }
  template <typename F>
  void visit(F&& f) const {
    const_cast<ModelParams*>(this)->visit([&](const char* n, Tensor<T>& t) {
      f(n, static_cast<const Tensor<T>&>(t));
    });
  }

  std::size_t tensor_count() const {
    std::size_t n = 0;
    visit([&](const char*, const Tensor<T>&) { ++n; });
    return n;
  }

  template <typename U>
  ModelParams<U> cast() const {
    ModelParams<U> out;
    out.spec = spec;
    out.cell_attn.W1 = cell_attn.W1.template cast<U>();
    out.cell_attn.W2 = cell_attn.W2.template cast<U>();
    lstm.visit([&](const char* name, const Tensor<T>& t) {
      out.lstm.visit([&](const char* oname, Tensor<U>& ot) {
        if (std::string(oname) == name) ot = t.template cast<U>();
      });
    });
    out.head_attn.W1 = head_attn.W1.template cast<U>();
    out.head_attn.W2 = head_attn.W2.template cast<U>();
    out.W_out = W_out.template cast<U>();
    out.b_out = b_out.template cast<U>();
    return out;
  }
};

struct RunOptions {
  bool trace_attention = false;
  bool pin_attention_to_current = false;  // test hook, cell attention only
};

template <typename T>
struct ForwardGraph {
  NodeId X = -1;
  NodeId scores = -1;
  std::vector<NodeId> params;  // leaves in visit order
  std::vector<StateNodes<T>> states;
  std::vector<AttendResult> attention;  // per step when traced
};

// Classification head over the per-step hidden states.
template <typename T>
NodeId apply_head(Tape<T>& tape, HeadKind head, std::span<const StateNodes<T>> states,
                  const AttentionNodes<T>* head_attn, NodeId W_out, NodeId b_out) {
  NodeId rep = -1;
  switch (head) {
    case HeadKind::kLastHidden:
      rep = states.back().h;
      break;
    case HeadKind::kMaxPool:
    case HeadKind::kMeanPool: {
      std::vector<NodeId> hs;
      hs.reserve(states.size());
      for (const auto& s : states) hs.push_back(s.h);
      const NodeId H = tape.stack_rows(hs);
      rep = head == HeadKind::kMaxPool ? tape.max_over_rows(H) : tape.mean_over_rows(H);
      break;
    }
    case HeadKind::kSelfAttention: {
      std::vector<NodeId> hs;
      hs.reserve(states.size());
      for (const auto& s : states) hs.push_back(s.h);
      const NodeId H = tape.stack_rows(hs);
      const NodeId A = tape.softmax_rows(attention_logits(tape, *head_attn, H));
      rep = tape.flatten_row(tape.matmul(A, H));
      break;
    }
  }
  return tape.add(tape.matmul(rep, W_out), b_out);
}

// Unrolls the configured cell over all rows of X from zero state and applies
// the head. Returns raw class scores (pre-softmax).
template <typename T>
ForwardGraph<T> run_sequence(Tape<T>& tape, const ModelParams<T>& params, const Tensor<T>& X,
                             const RunOptions& opts = {}) {
  params.spec.validate();
  const int steps = static_cast<int>(X.rows());
  if (steps < 1) throw std::logic_error("run_sequence: need at least one time step");
  if (X.cols() != static_cast<std::size_t>(params.spec.input_dim)) {
    throw DimensionError("run_sequence: input has " + std::to_string(X.cols()) +
                         " features, model wants " + std::to_string(params.spec.input_dim));
  }

  ForwardGraph<T> g;
  g.X = tape.input(X);

  std::vector<NodeId> leaves;
  params.visit([&](const char*, const Tensor<T>& t) { leaves.push_back(tape.input(t)); });
  g.params = leaves;
  std::size_t li = 0;
  AttentionNodes<T> cell_attn;
  if (params.spec.cell_attention()) {
    cell_attn.W1 = leaves[li++];
    cell_attn.W2 = leaves[li++];
  }
  LstmNodes<T> lstm_nodes{};
  {
    std::vector<NodeId*> slots = {&lstm_nodes.Wxi, &lstm_nodes.Wxf, &lstm_nodes.Wxo,
                                  &lstm_nodes.Wxc, &lstm_nodes.Whi, &lstm_nodes.Whf,
                                  &lstm_nodes.Who, &lstm_nodes.Whc, &lstm_nodes.bi,
                                  &lstm_nodes.bf,  &lstm_nodes.bo,  &lstm_nodes.bc};
    for (NodeId* s : slots) *s = leaves[li++];
  }
  AttentionNodes<T> head_attn;
  if (params.spec.head() == HeadKind::kSelfAttention) {
    head_attn.W1 = leaves[li++];
    head_attn.W2 = leaves[li++];
  }
  const NodeId w_out = leaves[li++];
  const NodeId b_out = leaves[li++];

  StateNodes<T> state = zero_state(tape, params.spec.hidden);
  g.states.reserve(steps);

  if (params.spec.cell_attention()) {
    CellAttentionGraph<T> cfg;
    cfg.attn = cell_attn;
    cfg.lstm = lstm_nodes;
    cfg.mode = params.spec.mode;
    cfg.hops = params.spec.hops;
    cfg.window = params.spec.kind == ModelKind::kLstmInCellPartial ? params.spec.partial_window : 0;
    cfg.pin_to_current = opts.pin_attention_to_current;
    if (!cfg.pin_to_current) cfg.shared_logits = attention_logits(tape, cell_attn, g.X);
    for (int t = 0; t < steps; ++t) {
      AttendResult trace;
      state = cell_attention_step(tape, cfg, g.X, t, state, opts.trace_attention ? &trace : nullptr);
      if (opts.trace_attention) g.attention.push_back(trace);
      g.states.push_back(state);
    }
  } else {
    for (int t = 0; t < steps; ++t) {
      const NodeId xt = tape.rows_range(g.X, t, t + 1);
      state = lstm_step(tape, lstm_nodes, xt, state);
      g.states.push_back(state);
    }
  }

  const AttentionNodes<T>* head_ptr =
      params.spec.head() == HeadKind::kSelfAttention ? &head_attn : nullptr;
  g.scores = apply_head<T>(tape, params.spec.head(), g.states, head_ptr, w_out, b_out);
  return g;
}

// One forward pass on a private tape; returns raw class scores.
template <typename T>
Tensor<T> forward_scores(const ModelParams<T>& params, const Tensor<T>& X) {
  Tape<T> tape;
  return tape.value(run_sequence(tape, params, X).scores);
}

// Checkpoint file: magic "ICAT", little-endian throughout. Layout documented
// in docs/formats.md; tensors are stored as 64-bit reals in visit order.
void save_checkpoint(const std::string& path, const ModelParams<double>& params);
ModelParams<double> load_checkpoint(const std::string& path);

// Allocates every tensor of the spec with zeros (shapes only).
template <typename T>
ModelParams<T> zero_params(const ModelSpec& spec) {
  spec.validate();
  ModelParams<T> p;
  p.spec = spec;
  const int in = spec.cell_input_dim();
  const int h = spec.hidden;
  if (spec.cell_attention()) {
    p.cell_attn.W1 = Tensor<T>(spec.attn_dim, spec.input_dim);
    p.cell_attn.W2 = Tensor<T>(spec.hops, spec.attn_dim);
  }
  p.lstm.Wxi = Tensor<T>(in, h);
  p.lstm.Wxf = Tensor<T>(in, h);
  p.lstm.Wxo = Tensor<T>(in, h);
  p.lstm.Wxc = Tensor<T>(in, h);
  p.lstm.Whi = Tensor<T>(h, h);
  p.lstm.Whf = Tensor<T>(h, h);
  p.lstm.Who = Tensor<T>(h, h);
  p.lstm.Whc = Tensor<T>(h, h);
  p.lstm.bi = Tensor<T>(1, h);
  p.lstm.bf = Tensor<T>(1, h);
  p.lstm.bo = Tensor<T>(1, h);
  p.lstm.bc = Tensor<T>(1, h);
  if (spec.head() == HeadKind::kSelfAttention) {
    p.head_attn.W1 = Tensor<T>(spec.attn_dim, h);
    p.head_attn.W2 = Tensor<T>(spec.head_hops, spec.attn_dim);
  }
  p.W_out = Tensor<T>(spec.head_dim(), spec.classes);
  p.b_out = Tensor<T>(1, spec.classes);
  return p;
}

}  // namespace icat
