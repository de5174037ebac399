// Copyright 2026 The privrecon Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "privrecon/errors.hpp"
#include "privrecon/image_io.hpp"
#include "privrecon/random.hpp"

namespace privrecon {
namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) {
  return {s.begin(), s.end()};
}

ImageTensor random_clean(const ImageShape& shape, std::uint64_t seed) {
  Rng rng(RngSeed{seed});
  ImageTensor x(shape);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
  return x;
}

TEST(Pnm, AsciiGrayExample) {
  const auto x = decode_image(bytes_of("P2 2 2 255\n0 255 0 255\n"));
  EXPECT_EQ(x.shape(), (ImageShape{2, 2, 1}));
  EXPECT_EQ(x.data(), Eigen::Vector4d(0, 1, 0, 1));
}

TEST(Pnm, CommentsAndBinaryRaster) {
  const auto x = decode_image(bytes_of("P2\n# a comment\n3 1\n# another\n4\n0 2 4\n"));
  EXPECT_EQ(x.data(), Eigen::Vector3d(0, 0.5, 1));
  std::string p6 = "P6 1 2 255\n";
  p6 += std::string{'\xff', '\x00', '\x80', '\x00', '\xff', '\x00'};
  const auto rgb = decode_image(bytes_of(p6));
  EXPECT_EQ(rgb.shape(), (ImageShape{2, 1, 3}));
  EXPECT_DOUBLE_EQ(rgb(0, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(rgb(0, 0, 2), 128.0 / 255.0);
  EXPECT_DOUBLE_EQ(rgb(1, 0, 1), 1.0);
}

TEST(Pnm, RoundTripWithinQuantisation) {
  for (int channels : {1, 3}) {
    const auto x = random_clean({7, 5, channels}, 3);
    const auto enc = encode_pnm(x);
    EXPECT_FALSE(enc.lossy);
    const auto y = decode_image(enc.bytes);
    EXPECT_EQ(y.shape(), x.shape());
    EXPECT_LE((y.data() - x.data()).cwiseAbs().maxCoeff(), 0.5 / 255 + 1e-12);
    // Quantised values survive a second trip unchanged.
    EXPECT_EQ(decode_image(encode_pnm(y).bytes).data(), y.data());
  }
}

TEST(Png, RoundTripWithinQuantisation) {
  for (int channels : {1, 3}) {
    const auto x = random_clean({9, 12, channels}, 4);
    const auto enc = encode_png(x);
    EXPECT_FALSE(enc.lossy);
    ASSERT_GE(enc.bytes.size(), 8u);
    EXPECT_EQ(enc.bytes[1], 'P');
    const auto y = decode_image(enc.bytes);
    EXPECT_EQ(y.shape(), x.shape());
    EXPECT_LE((y.data() - x.data()).cwiseAbs().maxCoeff(), 0.5 / 255 + 1e-12);
    EXPECT_EQ(decode_image(encode_png(y).bytes).data(), y.data());
  }
}

TEST(Png, OutOfRangeLatentIsClampedAndFlagged) {
  ImageTensor x(2, 2, 1);
  x.data() << -0.5, 0.25, 1.7, NAN;
  const auto enc = encode_png(x);
  EXPECT_TRUE(enc.lossy);
  const auto y = decode_image(enc.bytes);
  EXPECT_DOUBLE_EQ(y.data()[0], 0.0);
  EXPECT_NEAR(y.data()[1], 0.25, 0.5 / 255);
  EXPECT_DOUBLE_EQ(y.data()[2], 1.0);
  EXPECT_DOUBLE_EQ(y.data()[3], 0.0);
  EXPECT_TRUE(encode_pnm(x).lossy);
}

TEST(ImageFiles, WriteAndReadByExtension) {
  const auto dir = std::filesystem::temp_directory_path() / "privrecon_image_io_test";
  std::filesystem::create_directories(dir);
  const auto x = random_clean({6, 6, 3}, 5);
  for (const char* name : {"a.png", "a.ppm", "a.pnm"}) {
    const std::string path = (dir / name).string();
    EXPECT_FALSE(write_image(x, path));
    EXPECT_LE((read_image(path).data() - x.data()).cwiseAbs().maxCoeff(), 0.5 / 255 + 1e-12);
  }
  EXPECT_THROW(write_image(x, (dir / "a.bmp").string()), FormatError);
  EXPECT_THROW(read_image((dir / "missing.png").string()), std::exception);
  std::filesystem::remove_all(dir);
}

TEST(ImageFiles, MalformedInputRejected) {
  EXPECT_THROW(decode_image(bytes_of("")), FormatError);
  EXPECT_THROW(decode_image(bytes_of("GIF89a")), FormatError);
  EXPECT_THROW(decode_image(bytes_of("P2 2 2 255\n0 255 0\n")), FormatError);
  EXPECT_THROW(decode_image(bytes_of("P2 2 1 10\n0 11\n")), FormatError);
  EXPECT_THROW(decode_image(bytes_of("P2 0 1 255\n")), FormatError);
  EXPECT_THROW(decode_image(bytes_of("P2 1 1 255\nx\n")), FormatError);
  auto png = encode_png(random_clean({4, 4, 1}, 1)).bytes;
  png.resize(png.size() / 2);
  EXPECT_THROW(decode_image(png), FormatError);
}

TEST(Base64, KnownVectorsAndRoundTrip) {
  EXPECT_EQ(base64_encode(bytes_of("")), "");
  EXPECT_EQ(base64_encode(bytes_of("f")), "Zg==");
  EXPECT_EQ(base64_encode(bytes_of("fo")), "Zm8=");
  EXPECT_EQ(base64_encode(bytes_of("foobar")), "Zm9vYmFy");
  EXPECT_EQ(base64_decode("Zm9vYg=="), bytes_of("foob"));
  EXPECT_EQ(base64_decode("data:image/png;base64,Zm9v"), bytes_of("foo"));
  std::vector<std::uint8_t> all(256);
  for (int i = 0; i < 256; ++i) all[i] = static_cast<std::uint8_t>(i);
  EXPECT_EQ(base64_decode(base64_encode(all)), all);
  EXPECT_THROW(base64_decode("Zm9v!"), FormatError);
}

}  // namespace
}  // namespace privrecon
