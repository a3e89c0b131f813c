// SPDX-License-Identifier: Apache-2.0
#include "icat/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "icat/errors.hpp"
#include "icat/io_util.hpp"

namespace icat {

void BoxSpec::validate(int T, int N) const {
  if (t0 < 0 || t1 <= t0 || t1 > T || f0 < 0 || f1 <= f0 || f1 > N) {
    throw ValidationError("box out of range: t [" + std::to_string(t0) + ", " +
                          std::to_string(t1) + ") f [" + std::to_string(f0) + ", " +
                          std::to_string(f1) + ") for T=" + std::to_string(T) +
                          " N=" + std::to_string(N));
  }
}

const char* box_kind_name(BoxKind kind) {
  switch (kind) {
    case BoxKind::kEarlier: return "earlier";
    case BoxKind::kMiddle: return "middle";
    case BoxKind::kLatter: return "latter";
    case BoxKind::kMixed: return "mixed";
    case BoxKind::kThreeEarlier: return "three-earlier";
    case BoxKind::kThreeMiddle: return "three-middle";
    case BoxKind::kThreeLatter: return "three-latter";
    case BoxKind::kMoving: return "moving";
  }
  return "?";
}

BoxKind box_kind_from_name(const std::string& name) {
  for (BoxKind k : {BoxKind::kEarlier, BoxKind::kMiddle, BoxKind::kLatter, BoxKind::kMixed,
                    BoxKind::kThreeEarlier, BoxKind::kThreeMiddle, BoxKind::kThreeLatter,
                    BoxKind::kMoving}) {
    if (name == box_kind_name(k)) return k;
  }
  throw ValidationError("unknown dataset kind: " + name);
}

namespace {

int scaled(double frac, int total) { return static_cast<int>(std::lround(frac * total)); }

// Single-box feature band [0.1 N, 0.4 N); three-box bands at
// [0.1, 0.2), [0.45, 0.55), [0.8, 0.9) of N.
struct Bands {
  int f0, f1;
  int b0[2], b1[2], b2[2];
  explicit Bands(int N)
      : f0(scaled(0.10, N)), f1(scaled(0.40, N)),
        b0{scaled(0.10, N), scaled(0.20, N)},
        b1{scaled(0.45, N), scaled(0.55, N)},
        b2{scaled(0.80, N), scaled(0.90, N)} {}
};

// Three staggered sub-intervals covering [r0, r1).
std::vector<std::pair<int, int>> thirds(int r0, int r1) {
  std::vector<std::pair<int, int>> out;
  for (int k = 0; k < 3; ++k) {
    const int a = r0 + static_cast<int>(std::lround(k * (r1 - r0) / 3.0));
    const int b = r0 + static_cast<int>(std::lround((k + 1) * (r1 - r0) / 3.0));
    out.emplace_back(a, b);
  }
  return out;
}

}  // namespace

std::vector<BoxSpec> boxes_for(BoxKind kind, const DataConfig& cfg, SplitMix64* rng) {
  const int T = cfg.T, N = cfg.N;
  const Bands bands(N);
  const double amp = cfg.amplitude;
  auto box = [&](int t0, int t1, int f0, int f1) {
    BoxSpec b{t0, t1, f0, f1, amp};
    b.validate(T, N);
    return b;
  };
  switch (kind) {
    case BoxKind::kEarlier:
      return {box(0, scaled(0.3, T), bands.f0, bands.f1)};
    case BoxKind::kMiddle:
      return {box(scaled(0.3, T), scaled(0.7, T), bands.f0, bands.f1)};
    case BoxKind::kLatter:
      return {box(scaled(0.7, T), T, bands.f0, bands.f1)};
    case BoxKind::kMoving:
      return {box(cfg.moving_start, cfg.moving_start + scaled(0.2, T), bands.f0, bands.f1)};
    case BoxKind::kMixed: {
      if (!rng) throw ValidationError("mixed kind needs a per-sample rng");
      const int wt = scaled(0.3, T), wf = scaled(0.3, N);
      const int t0 = static_cast<int>(rng->below(T - wt + 1));
      const int f0 = static_cast<int>(rng->below(N - wf + 1));
      return {box(t0, t0 + wt, f0, f0 + wf)};
    }
    case BoxKind::kThreeEarlier:
    case BoxKind::kThreeMiddle:
    case BoxKind::kThreeLatter: {
      int r0 = 0, r1 = scaled(0.3, T);
      if (kind == BoxKind::kThreeMiddle) {
        r0 = scaled(0.3, T);
        r1 = scaled(0.7, T);
      } else if (kind == BoxKind::kThreeLatter) {
        r0 = scaled(0.7, T);
        r1 = T;
      }
      const auto ts = thirds(r0, r1);
      return {box(ts[0].first, ts[0].second, bands.b0[0], bands.b0[1]),
              box(ts[1].first, ts[1].second, bands.b1[0], bands.b1[1]),
              box(ts[2].first, ts[2].second, bands.b2[0], bands.b2[1])};
    }
  }
  throw ValidationError("unknown dataset kind");
}

LabeledDataset generate_box_dataset(BoxKind kind, int n_samples, std::uint64_t seed,
                                    const DataConfig& cfg, std::uint64_t sample_offset) {
  if (n_samples < 2) throw ValidationError("need at least 2 samples");
  if (cfg.T < 1 || cfg.N < 1) throw ValidationError("T and N must be positive");

  LabeledDataset data;
  data.T = cfg.T;
  data.N = cfg.N;
  data.classes = 2;
  data.has_masks = true;
  data.labels.resize(n_samples);
  data.values.resize(static_cast<std::size_t>(n_samples) * cfg.T * cfg.N);
  data.masks.assign(static_cast<std::size_t>(n_samples) * cfg.T * cfg.N, 0);

  // Fixed kinds share one box layout; validate it once up front.
  if (kind != BoxKind::kMixed) boxes_for(kind, cfg, nullptr);

  const std::size_t cells = static_cast<std::size_t>(cfg.T) * cfg.N;
  for (int i = 0; i < n_samples; ++i) {
    const std::uint64_t global = sample_offset + static_cast<std::uint64_t>(i);
    SplitMix64 rng(derive_seed(seed, global));
    const std::uint16_t label = static_cast<std::uint16_t>(global % 2);
    data.labels[i] = label;
    float* x = data.values.data() + i * cells;
    std::uint8_t* m = data.masks.data() + i * cells;
    for (std::size_t k = 0; k < cells; ++k) x[k] = static_cast<float>(rng.gaussian());
    const auto boxes = boxes_for(kind, cfg, &rng);
    const float sign = label == 1 ? 1.0f : -1.0f;
    for (const auto& b : boxes) {
      for (int t = b.t0; t < b.t1; ++t) {
        for (int f = b.f0; f < b.f1; ++f) {
          x[static_cast<std::size_t>(t) * cfg.N + f] += sign * static_cast<float>(b.amplitude);
          m[static_cast<std::size_t>(t) * cfg.N + f] = 1;
        }
      }
    }
  }
  data.validate();
  return data;
}

DatasetSplit generate_box_split(BoxKind kind, int n_train, int n_test, std::uint64_t seed,
                                const DataConfig& cfg) {
  DatasetSplit split;
  split.train = generate_box_dataset(kind, n_train, seed, cfg, 0);
  split.test = generate_box_dataset(kind, n_test, seed, cfg, static_cast<std::uint64_t>(n_train));
  return split;
}

Tensor<double> LabeledDataset::sample_tensor(std::size_t i) const {
  Tensor<double> out(T, N);
  const float* x = sample(i);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = static_cast<double>(x[k]);
  return out;
}

Tensor<float> LabeledDataset::sample_tensor_f32(std::size_t i) const {
  Tensor<float> out(T, N);
  const float* x = sample(i);
  std::copy(x, x + out.size(), out.data());
  return out;
}

Tensor<double> LabeledDataset::mask_tensor(std::size_t i) const {
  Tensor<double> out(T, N);
  const std::uint8_t* m = mask(i);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = static_cast<double>(m[k]);
  return out;
}

void LabeledDataset::validate() const {
  const std::size_t cells = static_cast<std::size_t>(T) * N;
  if (T < 1 || N < 1 || classes < 2) throw ValidationError("dataset: bad dimensions");
  if (values.size() != labels.size() * cells) throw ValidationError("dataset: value size mismatch");
  if (has_masks && masks.size() != values.size()) {
    throw ValidationError("dataset: mask size mismatch");
  }
  for (auto l : labels) {
    if (l >= classes) throw ValidationError("dataset: label out of range");
  }
}

namespace {
constexpr char kDataMagic[4] = {'I', 'C', 'T', 'S'};
constexpr std::uint16_t kDataVersion = 1;
}  // namespace

void save_dataset(const std::string& path, const LabeledDataset& data) {
  data.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NumericError("cannot open dataset for writing: " + path);
  out.write(kDataMagic, 4);
  io::write_u16(out, kDataVersion);
  io::write_u32(out, static_cast<std::uint32_t>(data.size()));
  io::write_u32(out, static_cast<std::uint32_t>(data.T));
  io::write_u32(out, static_cast<std::uint32_t>(data.N));
  io::write_u32(out, static_cast<std::uint32_t>(data.classes));
  io::write_u32(out, data.has_masks ? 1 : 0);
  const std::size_t cells = static_cast<std::size_t>(data.T) * data.N;
  for (std::size_t i = 0; i < data.size(); ++i) {
    io::write_u16(out, data.labels[i]);
    const float* x = data.sample(i);
    for (std::size_t k = 0; k < cells; ++k) io::write_f32(out, x[k]);
    if (data.has_masks) {
      // LSB-first bit packing in row-major cell order.
      const std::uint8_t* m = data.mask(i);
      for (std::size_t k = 0; k < cells; k += 8) {
        unsigned char byte = 0;
        for (std::size_t b = 0; b < 8 && k + b < cells; ++b) {
          if (m[k + b]) byte |= static_cast<unsigned char>(1u << b);
        }
        out.put(static_cast<char>(byte));
      }
    }
  }
  if (!out) throw NumericError("write failed: " + path);
}

LabeledDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open dataset: " + path);
  io::Reader r(in, path);
  char magic[4];
  r.read_exact(magic, 4);
  if (std::string(magic, 4) != std::string(kDataMagic, 4)) {
    throw FormatError(path + ": bad magic, not a dataset file");
  }
  const auto version = r.u16_le();
  if (version != kDataVersion) {
    throw FormatError(path + ": unsupported dataset version " + std::to_string(version));
  }
  LabeledDataset data;
  const std::uint32_t n = r.u32_le();
  data.T = static_cast<int>(r.u32_le());
  data.N = static_cast<int>(r.u32_le());
  data.classes = static_cast<int>(r.u32_le());
  data.has_masks = r.u32_le() != 0;
  const std::size_t cells = static_cast<std::size_t>(data.T) * data.N;
  data.labels.resize(n);
  data.values.resize(n * cells);
  if (data.has_masks) data.masks.assign(n * cells, 0);
  for (std::uint32_t i = 0; i < n; ++i) {
    data.labels[i] = r.u16_le();
    float* x = data.values.data() + i * cells;
    for (std::size_t k = 0; k < cells; ++k) x[k] = r.f32_le();
    if (data.has_masks) {
      std::uint8_t* m = data.masks.data() + i * cells;
      for (std::size_t k = 0; k < cells; k += 8) {
        unsigned char byte;
        r.read_exact(&byte, 1);
        for (std::size_t b = 0; b < 8 && k + b < cells; ++b) m[k + b] = (byte >> b) & 1u;
      }
    }
  }
  data.validate();
  return data;
}

LabeledDataset load_mnist_timeseries(const std::string& images_path,
                                     const std::string& labels_path,
                                     const std::vector<int>& digits) {
  if (digits.empty()) throw ValidationError("need at least one digit to keep");

  std::ifstream limg(images_path, std::ios::binary);
  if (!limg) throw FormatError("cannot open IDX image file: " + images_path);
  std::ifstream llab(labels_path, std::ios::binary);
  if (!llab) throw FormatError("cannot open IDX label file: " + labels_path);
  io::Reader img(limg, images_path);
  io::Reader lab(llab, labels_path);

  const std::uint32_t img_magic = img.u32_be();
  if (img_magic != 0x00000803u) {
    throw FormatError(images_path + ": bad IDX image magic 0x" + std::to_string(img_magic) +
                      " at byte offset 0");
  }
  const std::uint32_t lab_magic = lab.u32_be();
  if (lab_magic != 0x00000801u) {
    throw FormatError(labels_path + ": bad IDX label magic at byte offset 0");
  }
  const std::uint32_t n_img = img.u32_be();
  const std::uint32_t rows = img.u32_be();
  const std::uint32_t cols = img.u32_be();
  if (rows != 28 || cols != 28) {
    throw FormatError(images_path + ": expected 28x28 images, got " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " at byte offset 8");
  }
  const std::uint32_t n_lab = lab.u32_be();
  if (n_img != n_lab) {
    throw FormatError(images_path + ": image count " + std::to_string(n_img) +
                      " does not match label count " + std::to_string(n_lab));
  }

  std::vector<int> remap(10, -1);
  std::vector<int> sorted = digits;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] < 0 || sorted[i] > 9) throw ValidationError("digits must be in 0..9");
    remap[sorted[i]] = static_cast<int>(i);
  }

  LabeledDataset data;
  data.T = 28;
  data.N = 28;
  data.classes = static_cast<int>(sorted.size());
  data.has_masks = false;

  std::vector<unsigned char> pixels(28 * 28);
  for (std::uint32_t i = 0; i < n_img; ++i) {
    img.read_exact(pixels.data(), pixels.size());
    unsigned char digit;
    lab.read_exact(&digit, 1);
    if (digit > 9) {
      throw FormatError(labels_path + ": label value " + std::to_string(int(digit)) +
                        " out of range at byte offset " + std::to_string(lab.offset() - 1));
    }
    if (remap[digit] < 0) continue;
    data.labels.push_back(static_cast<std::uint16_t>(remap[digit]));
    for (unsigned char p : pixels) data.values.push_back(static_cast<float>(p) / 255.0f);
  }
  data.validate();
  return data;
}

}  // namespace icat
