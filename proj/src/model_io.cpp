// SPDX-License-Identifier: Apache-2.0
#include <fstream>

#include "icat/io_util.hpp"
#include "icat/model.hpp"

namespace icat {

namespace {
constexpr char kMagic[4] = {'I', 'C', 'A', 'T'};
constexpr std::uint16_t kVersion = 1;
}  // namespace

const char* model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLstm: return "lstm";
    case ModelKind::kLstmInCell: return "lstm-incell";
    case ModelKind::kLstmSelfAttn: return "lstm-selfattn";
    case ModelKind::kLstmMaxPool: return "lstm-maxpool";
    case ModelKind::kLstmMeanPool: return "lstm-meanpool";
    case ModelKind::kLstmInCellPartial: return "lstm-incell-partial";
  }
  return "?";
}

ModelKind model_kind_from_name(const std::string& name) {
  for (ModelKind k : {ModelKind::kLstm, ModelKind::kLstmInCell, ModelKind::kLstmSelfAttn,
                      ModelKind::kLstmMaxPool, ModelKind::kLstmMeanPool,
                      ModelKind::kLstmInCellPartial}) {
    if (name == model_name(k)) return k;
  }
  throw ValidationError("unknown model kind: " + name);
}

void save_checkpoint(const std::string& path, const ModelParams<double>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NumericError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, 4);
  io::write_u16(out, kVersion);
  io::write_u16(out, static_cast<std::uint16_t>(params.spec.kind));
  io::write_u16(out, params.spec.mode == AttentionMode::kAveraged ? 1 : 0);
  io::write_u32(out, static_cast<std::uint32_t>(params.spec.partial_window));
  for (int d : {params.spec.input_dim, params.spec.max_steps, params.spec.hidden,
                params.spec.attn_dim, params.spec.hops, params.spec.head_hops,
                params.spec.classes}) {
    io::write_u32(out, static_cast<std::uint32_t>(d));
  }
  params.visit([&](const char*, const Tensor<double>& t) {
    for (std::size_t i = 0; i < t.size(); ++i) io::write_f64(out, t[i]);
  });
  if (!out) throw NumericError("write failed: " + path);
}

ModelParams<double> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint: " + path);
  io::Reader r(in, path);
  char magic[4];
  r.read_exact(magic, 4);
  if (std::string(magic, 4) != std::string(kMagic, 4)) {
    throw FormatError(path + ": bad magic, not a checkpoint file");
  }
  const auto version = r.u16_le();
  if (version != kVersion) {
    throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  ModelSpec spec;
  const auto tag = r.u16_le();
  if (tag > static_cast<std::uint16_t>(ModelKind::kLstmInCellPartial)) {
    throw FormatError(path + ": unknown architecture tag " + std::to_string(tag));
  }
  spec.kind = static_cast<ModelKind>(tag);
  spec.mode = r.u16_le() == 1 ? AttentionMode::kAveraged : AttentionMode::kFull;
  spec.partial_window = static_cast<int>(r.u32_le());
  spec.input_dim = static_cast<int>(r.u32_le());
  spec.max_steps = static_cast<int>(r.u32_le());
  spec.hidden = static_cast<int>(r.u32_le());
  spec.attn_dim = static_cast<int>(r.u32_le());
  spec.hops = static_cast<int>(r.u32_le());
  spec.head_hops = static_cast<int>(r.u32_le());
  spec.classes = static_cast<int>(r.u32_le());
  auto params = zero_params<double>(spec);
  params.visit([&](const char*, Tensor<double>& t) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = r.f64_le();
  });
  return params;
}

}  // namespace icat
