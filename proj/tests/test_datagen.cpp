// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "icat/datagen.hpp"
#include "icat/errors.hpp"

using namespace icat;

namespace {

bool in_any_box(const std::vector<BoxSpec>& boxes, int t, int f) {
  for (const auto& b : boxes) {
    if (t >= b.t0 && t < b.t1 && f >= b.f0 && f < b.f1) return true;
  }
  return false;
}

void check_masks_match(const LabeledDataset& data, const std::vector<BoxSpec>& boxes) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::uint8_t* m = data.mask(i);
    for (int t = 0; t < data.T; ++t) {
      for (int f = 0; f < data.N; ++f) {
        REQUIRE(m[t * data.N + f] == (in_any_box(boxes, t, f) ? 1 : 0));
      }
    }
  }
}

}  // namespace

TEST_CASE("earlier box occupies the first thirty timesteps of the feature band") {
  DataConfig cfg;
  auto data = generate_box_dataset(BoxKind::kEarlier, 4, 7, cfg);
  CHECK(data.T == 100);
  CHECK(data.N == 100);
  check_masks_match(data, {{0, 30, 10, 40, 1.0}});
}

TEST_CASE("middle, latter and moving boxes land on their documented windows") {
  DataConfig cfg;
  check_masks_match(generate_box_dataset(BoxKind::kMiddle, 2, 1, cfg), {{30, 70, 10, 40, 1.0}});
  check_masks_match(generate_box_dataset(BoxKind::kLatter, 2, 1, cfg), {{70, 100, 10, 40, 1.0}});
  cfg.moving_start = 40;
  check_masks_match(generate_box_dataset(BoxKind::kMoving, 2, 1, cfg), {{40, 60, 10, 40, 1.0}});
}

TEST_CASE("three-box kinds stagger both feature bands and time intervals") {
  DataConfig cfg;
  check_masks_match(generate_box_dataset(BoxKind::kThreeMiddle, 2, 5, cfg),
                    {{30, 43, 10, 20, 1.0}, {43, 57, 45, 55, 1.0}, {57, 70, 80, 90, 1.0}});
  check_masks_match(generate_box_dataset(BoxKind::kThreeEarlier, 2, 5, cfg),
                    {{0, 10, 10, 20, 1.0}, {10, 20, 45, 55, 1.0}, {20, 30, 80, 90, 1.0}});
  check_masks_match(generate_box_dataset(BoxKind::kThreeLatter, 2, 5, cfg),
                    {{70, 80, 10, 20, 1.0}, {80, 90, 45, 55, 1.0}, {90, 100, 80, 90, 1.0}});
}

TEST_CASE("mixed boxes move between samples but keep their size") {
  DataConfig cfg;
  auto data = generate_box_dataset(BoxKind::kMixed, 16, 3, cfg);
  std::set<std::vector<std::uint8_t>> distinct;
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<std::uint8_t> m(data.mask(i), data.mask(i) + 100 * 100);
    std::size_t area = 0;
    for (auto v : m) area += v;
    CHECK(area == 30 * 30);
    distinct.insert(std::move(m));
  }
  CHECK(distinct.size() > 4);
}

TEST_CASE("positive and negative classes differ by two on box cells in the mean") {
  DataConfig cfg;
  cfg.T = 40;
  cfg.N = 30;
  auto data = generate_box_dataset(BoxKind::kEarlier, 600, 11, cfg);
  double pos = 0.0, neg = 0.0;
  std::size_t pos_n = 0, neg_n = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const float* x = data.sample(i);
    const std::uint8_t* m = data.mask(i);
    for (int k = 0; k < cfg.T * cfg.N; ++k) {
      if (!m[k]) continue;
      if (data.labels[i] == 1) {
        pos += x[k];
        ++pos_n;
      } else {
        neg += x[k];
        ++neg_n;
      }
    }
  }
  const double shift = pos / pos_n - neg / neg_n;
  CHECK(shift == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("amplitude zero leaves pure noise but keeps the masks") {
  DataConfig cfg;
  cfg.amplitude = 0.0;
  auto data = generate_box_dataset(BoxKind::kLatter, 50, 5, cfg);
  double mean = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const float* x = data.sample(i);
    for (int k = 0; k < 100 * 100; ++k) mean += x[k];
  }
  mean /= 50.0 * 100 * 100;
  CHECK(std::abs(mean) < 0.01);
  std::size_t area = 0;
  for (auto v : data.masks) area += v;
  CHECK(area == 50u * 30 * 30);
}

TEST_CASE("class labels stay balanced within one sample") {
  auto count_ones = [](const LabeledDataset& d) {
    std::size_t ones = 0;
    for (auto l : d.labels) ones += l;
    return ones;
  };
  DataConfig cfg;
  cfg.T = 10;
  cfg.N = 10;
  for (int n : {10, 11}) {
    auto data = generate_box_dataset(BoxKind::kEarlier, n, 1, cfg);
    const std::size_t ones = count_ones(data);
    CHECK(std::abs(static_cast<long>(2 * ones) - n) <= 1);
  }
}

TEST_CASE("generation is bit-deterministic in the seed") {
  DataConfig cfg;
  cfg.T = 12;
  cfg.N = 9;
  auto a = generate_box_dataset(BoxKind::kMixed, 20, 99, cfg);
  auto b = generate_box_dataset(BoxKind::kMixed, 20, 99, cfg);
  CHECK(a.values == b.values);
  CHECK(a.masks == b.masks);
  CHECK(a.labels == b.labels);
  auto c = generate_box_dataset(BoxKind::kMixed, 20, 100, cfg);
  CHECK(a.values != c.values);
}

TEST_CASE("train and test splits draw from disjoint sample streams") {
  DataConfig cfg;
  cfg.T = 8;
  cfg.N = 6;
  auto split = generate_box_split(BoxKind::kEarlier, 6, 6, 42, cfg);
  // same index in each split must come from different noise streams
  for (std::size_t i = 0; i < split.test.size(); ++i) {
    bool differs = false;
    for (int k = 0; k < cfg.T * cfg.N && !differs; ++k) {
      differs = split.train.sample(i)[k] != split.test.sample(i)[k];
    }
    CHECK(differs);
  }
  // and regenerating the full stream reproduces the test tail
  auto full = generate_box_dataset(BoxKind::kEarlier, 12, 42, cfg);
  for (int k = 0; k < cfg.T * cfg.N; ++k) {
    CHECK(full.sample(6)[k] == split.test.sample(0)[k]);
  }
}

TEST_CASE("dataset files round-trip exactly") {
  DataConfig cfg;
  cfg.T = 7;
  cfg.N = 5;
  auto data = generate_box_dataset(BoxKind::kMiddle, 9, 3, cfg);
  const std::string path = "roundtrip_test.icts";
  save_dataset(path, data);
  auto loaded = load_dataset(path);
  CHECK(loaded.values == data.values);
  CHECK(loaded.labels == data.labels);
  CHECK(loaded.masks == data.masks);
  CHECK(loaded.T == data.T);
  CHECK(loaded.N == data.N);
  CHECK(loaded.classes == data.classes);
  CHECK(loaded.has_masks);
  std::remove(path.c_str());
}

TEST_CASE("dataset loader rejects bad magic and truncation") {
  const std::string path = "bad_dataset_test.icts";
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOPE";
  }
  CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("magic"), FormatError);
  {
    std::ofstream out(path, std::ios::binary);
    out << "ICTS";  // header cut short
  }
  CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("byte offset"), FormatError);
  std::remove(path.c_str());
}

TEST_CASE("box bounds are validated") {
  DataConfig cfg;
  cfg.moving_start = 95;  // box [95, 115) falls outside T = 100
  CHECK_THROWS_AS(generate_box_dataset(BoxKind::kMoving, 4, 1, cfg), ValidationError);
  CHECK_THROWS_AS(generate_box_dataset(BoxKind::kEarlier, 1, 1, DataConfig{}), ValidationError);
}

namespace {

void write_be32(std::ofstream& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void write_idx_fixture(const std::string& img_path, const std::string& lab_path,
                       const std::vector<int>& labels,
                       const std::vector<std::vector<unsigned char>>& images) {
  std::ofstream img(img_path, std::ios::binary);
  write_be32(img, 0x00000803);
  write_be32(img, static_cast<std::uint32_t>(images.size()));
  write_be32(img, 28);
  write_be32(img, 28);
  for (const auto& im : images) img.write(reinterpret_cast<const char*>(im.data()), im.size());
  std::ofstream lab(lab_path, std::ios::binary);
  write_be32(lab, 0x00000801);
  write_be32(lab, static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) lab.put(static_cast<char>(l));
}

}  // namespace

TEST_CASE("idx adapter keeps requested digits, remaps labels and scales pixels") {
  std::vector<std::vector<unsigned char>> images(4, std::vector<unsigned char>(28 * 28, 0));
  images[1].assign(28 * 28, 255);
  images[3][5 * 28 + 7] = 128;
  write_idx_fixture("fix_images.idx", "fix_labels.idx", {1, 7, 3, 6}, images);

  auto data = load_mnist_timeseries("fix_images.idx", "fix_labels.idx");
  REQUIRE(data.size() == 3);  // digit 3 dropped
  CHECK(data.T == 28);
  CHECK(data.N == 28);
  CHECK(data.classes == 3);
  CHECK_FALSE(data.has_masks);
  // digits 1/6/7 remap to 0/1/2 in ascending digit order
  CHECK(data.labels[0] == 0);
  CHECK(data.labels[1] == 2);
  CHECK(data.labels[2] == 1);
  // all-zero image stays all-zero; 255 scales to 1.0
  for (int k = 0; k < 28 * 28; ++k) CHECK(data.sample(0)[k] == 0.0f);
  CHECK(data.sample(1)[0] == 1.0f);
  CHECK(data.sample(2)[5 * 28 + 7] == doctest::Approx(128.0 / 255.0));

  // the label count cross-check: one independent pass over the label file
  std::ifstream lab("fix_labels.idx", std::ios::binary);
  lab.seekg(8);
  std::size_t expected = 0;
  for (char c; lab.get(c);) {
    if (c == 1 || c == 6 || c == 7) ++expected;
  }
  CHECK(data.size() == expected);

  std::remove("fix_images.idx");
  std::remove("fix_labels.idx");
}

TEST_CASE("idx adapter rejects malformed inputs with byte offsets") {
  {
    std::ofstream img("bad_images.idx", std::ios::binary);
    write_be32(img, 0x00000801);  // label magic in an image file
    std::ofstream lab("bad_labels.idx", std::ios::binary);
    write_be32(lab, 0x00000801);
    write_be32(lab, 0);
  }
  CHECK_THROWS_WITH_AS(load_mnist_timeseries("bad_images.idx", "bad_labels.idx"),
                       doctest::Contains("magic"), FormatError);
  {
    std::ofstream img("bad_images.idx", std::ios::binary);
    write_be32(img, 0x00000803);
    write_be32(img, 1);
    write_be32(img, 14);  // wrong geometry
    write_be32(img, 28);
  }
  CHECK_THROWS_WITH_AS(load_mnist_timeseries("bad_images.idx", "bad_labels.idx"),
                       doctest::Contains("28x28"), FormatError);
  {
    std::ofstream img("bad_images.idx", std::ios::binary);
    write_be32(img, 0x00000803);
    write_be32(img, 2);
    write_be32(img, 28);
    write_be32(img, 28);
    img.put(0);  // far too short
    std::ofstream lab("bad_labels.idx", std::ios::binary);
    write_be32(lab, 0x00000801);
    write_be32(lab, 2);
    lab.put(1);
    lab.put(6);
  }
  CHECK_THROWS_WITH_AS(load_mnist_timeseries("bad_images.idx", "bad_labels.idx"),
                       doctest::Contains("byte offset"), FormatError);
  std::remove("bad_images.idx");
  std::remove("bad_labels.idx");
}
