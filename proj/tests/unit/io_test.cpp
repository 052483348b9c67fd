// Copyright 2026 The MMCL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include <json.hpp>

#include "mmcl/core/rng.hpp"
#include "mmcl/data/synth.hpp"
#include "mmcl/io/checkpoint.hpp"
#include "mmcl/io/manifest.hpp"
#include "mmcl/io/ntu.hpp"
#include "mmcl/io/png.hpp"
#include "mmcl/io/text_features.hpp"

namespace mmcl::io {
namespace {

namespace fs = std::filesystem;

const fs::path kFixtures = MMCL_FIXTURE_DIR;

fs::path scratch_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  fs::path dir = fs::temp_directory_path() / "mmcl_io_test" / (std::string(info->test_suite_name()) + "." + info->name());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

bool same_bits(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::memcmp(a.data(), b.data(), a.numel() * sizeof(double)) == 0;
}

std::size_t count_tmp_files(const fs::path& dir) {
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) n += e.path().extension() == ".tmp" ? 1 : 0;
  return n;
}

TEST(Container, HeaderLayoutIsLittleEndian) {
  const Tensor t(Shape{2, 3}, {1, 2, 3, 4, 5, 6});
  const auto bytes = encode_tensor(t, DType::kFloat32);
  ASSERT_EQ(bytes.size(), 4u + 4 + 1 + 1 + 2 * 8 + 6 * 4);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "MMCT");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5] | bytes[6] | bytes[7], 0);
  EXPECT_EQ(bytes[8], 1);
  EXPECT_EQ(bytes[9], 2);
  EXPECT_EQ(bytes[10], 2);
  EXPECT_EQ(bytes[18], 3);
  // 1.0f is 0x3f800000
  EXPECT_EQ(bytes[26], 0x00);
  EXPECT_EQ(bytes[28], 0x80);
  EXPECT_EQ(bytes[29], 0x3f);
}

TEST(Container, Float64RoundTripIsBitwise) {
  RandomStream r(1, "container");
  Tensor t(Shape{3, 4, 5});
  for (double& v : t.values()) v = r.normal() * std::pow(10.0, r.uniform(-200, 200));
  t[0] = -0.0;
  t[1] = std::numeric_limits<double>::denorm_min();
  t[2] = std::numeric_limits<double>::max();
  const DecodedTensor d = decode_tensor(encode_tensor(t));
  EXPECT_EQ(d.dtype, DType::kFloat64);
  EXPECT_TRUE(same_bits(d.tensor, t));
}

TEST(Container, Float32StoresNearestFloat) {
  RandomStream r(2, "container");
  Tensor t(Shape{50});
  for (double& v : t.values()) v = r.normal();
  const Tensor back = decode_tensor(encode_tensor(t, DType::kFloat32)).tensor;
  for (std::size_t i = 0; i < t.numel(); ++i) {
    EXPECT_EQ(back[i], static_cast<double>(static_cast<float>(t[i])));
  }
  // values already representable in 32 bits come back bitwise
  const Tensor twice = decode_tensor(encode_tensor(back, DType::kFloat32)).tensor;
  EXPECT_TRUE(same_bits(twice, back));
}

TEST(Container, ScalarAndEmptyShapes) {
  const Tensor scalar(Shape{}, {4.5});
  EXPECT_TRUE(same_bits(decode_tensor(encode_tensor(scalar)).tensor, scalar));
  const Tensor empty(Shape{0, 3});
  EXPECT_EQ(decode_tensor(encode_tensor(empty)).tensor.shape(), (Shape{0, 3}));
}

TEST(Container, RejectsMalformedInput) {
  auto bytes = encode_tensor(Tensor(Shape{2}, {1, 2}));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_tensor(bad_magic), DataError);
  auto bad_version = bytes;
  bad_version[4] = 2;
  EXPECT_THROW(decode_tensor(bad_version), DataError);
  auto bad_dtype = bytes;
  bad_dtype[8] = 7;
  EXPECT_THROW(decode_tensor(bad_dtype), DataError);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(decode_tensor(truncated), DataError);
  auto padded = bytes;
  padded.push_back(0);
  EXPECT_THROW(decode_tensor(padded), DataError);
}

TEST(Container, MissingFileIsDataErrorNamingPath) {
  try {
    read_tensor("/nonexistent/where.mmct");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("where.mmct"), std::string::npos);
  }
}

TEST(AtomicWrite, ReplacesTargetAndLeavesNoTemporary) {
  const fs::path dir = scratch_dir();
  const fs::path target = dir / "t.mmct";
  write_tensor(target, Tensor(Shape{2}, {1, 2}));
  write_tensor(target, Tensor(Shape{3}, {3, 4, 5}));
  EXPECT_EQ(read_tensor(target).tensor.shape(), (Shape{3}));
  EXPECT_EQ(count_tmp_files(dir), 0u);
}

TEST(AtomicWrite, StaleTemporaryDoesNotAffectTarget) {
  const fs::path dir = scratch_dir();
  const fs::path target = dir / "t.mmct";
  write_tensor(target, Tensor(Shape{2}, {1, 2}));
  // a writer that died before its rename leaves only the temporary behind
  std::ofstream(dir / "t.mmct.tmp") << "partial";
  EXPECT_EQ(read_tensor(target).tensor[1], 2.0);
  write_tensor(target, Tensor(Shape{1}, {9}));
  EXPECT_EQ(read_tensor(target).tensor[0], 9.0);
  EXPECT_EQ(count_tmp_files(dir), 0u);
}

TEST(TextFixture, CommittedFileDecodes) {
  const IdMatrix m = read_id_matrix(kFixtures / "text_features.mmct", kFixtures / "text_ids.txt");
  EXPECT_EQ(m.dtype, DType::kFloat32);
  EXPECT_EQ(m.ids, (std::vector<std::string>{"clip_a", "clip_b", "clip_c"}));
  ASSERT_EQ(m.rows.shape(), (Shape{3, 6}));
  EXPECT_EQ(m.rows.at(0, 1), 4.0);
  EXPECT_EQ(m.rows.at(1, 5), 2.0);
  EXPECT_EQ(m.rows.at(2, 2), -2.0);
}

TEST(TextFixture, UnifiesByTruncationOrPadding) {
  const TextFeatureTable t = TextFeatureTable::load(kFixtures / "text_features.mmct", kFixtures / "text_ids.txt");
  EXPECT_EQ(t.raw_dim(), 6u);
  EXPECT_EQ(t.unified("clip_a", 4).values, (std::vector<double>{0.6, 0.8, 0, 0}));
  EXPECT_EQ(t.unified("clip_b", 4).values, (std::vector<double>{0.5, 0.5, 0.5, 0.5}));
  EXPECT_EQ(t.unified("clip_c", 4).values, (std::vector<double>{0, 0, -1, 0}));
  const auto padded = t.unified("clip_c", 8).values;
  const double norm = std::sqrt(4.25);
  const std::vector<double> want = {0, 0, -2 / norm, 0, 0, 0.5 / norm, 0, 0};
  ASSERT_EQ(padded.size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(padded[i], want[i], 1e-15);
}

TEST(TextFixture, ManifestLoadsWithZeroMissingIds) {
  const Dataset ds = load_dataset(kFixtures / "manifest.json", {4, false, true});
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.labels(), (std::vector<std::size_t>{0, 1, 0}));
  ASSERT_TRUE(ds.samples[0].text);
  EXPECT_EQ(ds.samples[0].text->sample_id, "s0");
  EXPECT_EQ(ds.samples[0].text->values, (std::vector<double>{0.6, 0.8, 0, 0}));
  EXPECT_EQ(ds.samples[2].skeleton.frames(), 4u);
  EXPECT_NEAR(ds.samples[2].skeleton.coords().at(3, 9, 2), 0.2 + 0.03 + 0.009 + 0.0002, 1e-15);
}

TEST(TextFixture, DanglingIdsAreAllListed) {
  const fs::path dir = scratch_dir();
  fs::copy(kFixtures, dir, fs::copy_options::recursive);
  nlohmann::json doc = nlohmann::json::parse(std::ifstream(dir / "manifest.json"));
  doc["samples"][0]["text_id"] = "ghost_one";
  doc["samples"][2]["text_id"] = "ghost_two";
  std::ofstream(dir / "manifest.json") << doc.dump();
  try {
    load_dataset(dir / "manifest.json", {4, false, true});
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("ghost_one"), std::string::npos) << msg;
    EXPECT_NE(msg.find("ghost_two"), std::string::npos) << msg;
    EXPECT_EQ(msg.find("clip_b"), std::string::npos) << msg;
  }
  // skipping text skips the check
  EXPECT_EQ(load_dataset(dir / "manifest.json", {4, false, false}).size(), 3u);
}

TEST(TextFeatures, WriteReadRoundTrip) {
  const fs::path dir = scratch_dir();
  const std::vector<TextFeatureVector> f = {unify_text_features(std::vector<double>{1, 2, 3}, 3, "x"),
                                            unify_text_features(std::vector<double>{0, -1, 5}, 3, "y")};
  write_text_features(dir / "t.mmct", dir / "t.txt", f);
  const TextFeatureTable t = TextFeatureTable::load(dir / "t.mmct", dir / "t.txt");
  EXPECT_EQ(t.unified("y", 3).values, f[1].values);
  EXPECT_EQ(t.missing({"x", "q", "y", "r"}), (std::vector<std::string>{"q", "r"}));
}

TEST(TextFeatures, IdListMustMatchRowsAndBeUnique) {
  const fs::path dir = scratch_dir();
  write_tensor(dir / "t.mmct", Tensor(Shape{2, 3}));
  std::ofstream(dir / "three.txt") << "a\nb\nc\n";
  std::ofstream(dir / "dup.txt") << "a\na\n";
  std::ofstream(dir / "crlf.txt") << "a\r\nb";
  EXPECT_THROW(read_id_matrix(dir / "t.mmct", dir / "three.txt"), DataError);
  EXPECT_THROW(read_id_matrix(dir / "t.mmct", dir / "dup.txt"), DataError);
  EXPECT_EQ(read_id_matrix(dir / "t.mmct", dir / "crlf.txt").ids, (std::vector<std::string>{"a", "b"}));
}

TEST(Checkpoint, RoundTripIsBitwise) {
  const fs::path dir = scratch_dir() / "ckpt";
  ParameterSet p;
  p.init_normal("a.w", {3, 4}, 0.7, 1);
  p.init_normal("b", {5}, 1e-3, 2);
  p.init_zeros("frm.m", {2, 3, 3});
  save_checkpoint(dir, p, "train.seed = 4\n");
  const Checkpoint c = load_checkpoint(dir);
  EXPECT_EQ(c.config_text, "train.seed = 4\n");
  ASSERT_EQ(c.params.size(), 3u);
  for (const auto& [name, value] : p.items()) EXPECT_TRUE(same_bits(c.params.at(name), value)) << name;
  EXPECT_EQ(count_tmp_files(dir), 0u);
}

TEST(Checkpoint, MissingIndexIsDataError) {
  EXPECT_THROW(load_checkpoint(scratch_dir()), DataError);
}

TEST(Png, EncodeDecodeRoundTrip) {
  const fs::path dir = scratch_dir();
  RgbImage img(5, 7);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i * 37);
  write_png(dir / "x.png", img);
  const RgbImage back = read_png(dir / "x.png");
  EXPECT_EQ(back.height, 5u);
  EXPECT_EQ(back.width, 7u);
  EXPECT_EQ(back.pixels, img.pixels);
  std::ofstream(dir / "junk.png") << "not a png";
  EXPECT_THROW(read_png(dir / "junk.png"), DataError);
}

std::string ntu_body(double base) {
  std::string s = "72057594037931101 0 1 1 1 1 0 0.02 0.15 2\n25\n";
  for (int j = 0; j < 25; ++j) {
    s += std::to_string(base + j) + " " + std::to_string(base + j + 0.5) + " " + std::to_string(base + 3.0);
    s += " 0 0 0 0 0 0 0 0 2\n";
  }
  return s;
}

TEST(Ntu, FirstBodyIsKeptAndEmptyFramesRepeat) {
  const std::string text = "3\n2\n" + ntu_body(1.0) + ntu_body(100.0) + "0\n1\n" + ntu_body(7.0);
  const Tensor t = parse_ntu_skeleton(text);
  ASSERT_EQ(t.shape(), (Shape{3, 25, 3}));
  EXPECT_EQ(t.at(0, 4, 0), 5.0);
  EXPECT_EQ(t.at(0, 4, 1), 5.5);
  EXPECT_EQ(t.at(0, 0, 2), 4.0);
  EXPECT_EQ(t.at(1, 4, 0), 5.0);
  EXPECT_EQ(t.at(2, 24, 0), 31.0);
}

TEST(Ntu, MalformedInputIsDataError) {
  EXPECT_THROW(parse_ntu_skeleton("0\n"), DataError);
  EXPECT_THROW(parse_ntu_skeleton("1\n1\n1 2 3 4 5 6 7 8 9 10\n24\n"), DataError);
  EXPECT_THROW(parse_ntu_skeleton("2\n1\n" + ntu_body(0.0)), DataError);
  EXPECT_THROW(parse_ntu_skeleton("1\n0\n"), DataError);
}

TEST(Manifest, SyntheticDatasetRoundTrips) {
  const fs::path dir = scratch_dir();
  SynthSpec spec;
  spec.class_count = 2;
  spec.train_per_class = 2;
  spec.test_per_class = 1;
  spec.frames = 5;
  spec.image_size = 12;
  spec.text_dim = 6;
  const SynthData d = synth_dataset(spec);
  const fs::path path = write_dataset(d.train, dir, "train");
  const Dataset back = load_dataset(path, {6, true, true});
  ASSERT_EQ(back.size(), d.train.size());
  EXPECT_EQ(*back.topology, *d.train.topology);
  for (std::size_t i = 0; i < back.size(); ++i) {
    const Sample &a = d.train.samples[i], &b = back.samples[i];
    EXPECT_EQ(a.id, b.id);
    EXPECT_EQ(a.label, b.label);
    EXPECT_TRUE(same_bits(a.skeleton.coords(), b.skeleton.coords()));
    ASSERT_TRUE(b.frames);
    EXPECT_EQ(b.frames->frames.size(), 5u);
    EXPECT_EQ(b.frames->frames[3].pixels, a.frames->frames[3].pixels);
    EXPECT_EQ(b.frames->boxes[2], a.frames->boxes[2]);
    ASSERT_TRUE(b.text);
    for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(b.text->values[k], a.text->values[k], 1e-15);
  }
  EXPECT_EQ(count_tmp_files(dir), 0u);
}

TEST(Manifest, MissingSkeletonNamesTheFile) {
  const fs::path dir = scratch_dir();
  std::ofstream(dir / "m.json") << R"({"topology":"body10","class_count":2,
    "samples":[{"id":"a","label":0,"skeleton":"nowhere_to_be_found.mmct"}]})";
  try {
    load_dataset(dir / "m.json");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("nowhere_to_be_found.mmct"), std::string::npos);
  }
}

TEST(Manifest, StructuralErrorsAreDataErrors) {
  const fs::path dir = scratch_dir();
  std::ofstream(dir / "bad.json") << "{not json";
  std::ofstream(dir / "nolabel.json") << R"({"topology":"body10","class_count":2,"samples":[{"id":"a"}]})";
  std::ofstream(dir / "topo.json") << R"({"topology":"octopus","class_count":2,"samples":[]})";
  EXPECT_THROW(load_dataset(dir / "bad.json"), DataError);
  EXPECT_THROW(load_dataset(dir / "nolabel.json"), DataError);
  EXPECT_THROW(load_dataset(dir / "topo.json"), DataError);
}

TEST(Manifest, BoxesAcceptDashForWholeFrame) {
  const fs::path dir = scratch_dir();
  std::ofstream(dir / "b.txt") << "1 2 3 4\n-\n";
  const auto boxes = read_boxes(dir / "b.txt");
  ASSERT_EQ(boxes.size(), 2u);
  EXPECT_EQ(boxes[0]->h, 4.0);
  EXPECT_FALSE(boxes[1].has_value());
  EXPECT_EQ(boxes_to_text(boxes), "1 2 3 4\n-\n");
  std::ofstream(dir / "bad.txt") << "1 2 three 4\n";
  EXPECT_THROW(read_boxes(dir / "bad.txt"), DataError);
}

}  // namespace
}  // namespace mmcl::io
