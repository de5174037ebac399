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

#include "privrecon/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "privrecon/errors.hpp"

namespace privrecon {

namespace {

std::uint8_t quantize(double v, bool* lossy) {
  if (!std::isfinite(v)) {
    *lossy = true;
    return 0;
  }
  if (v < 0.0 || v > 1.0) {
    *lossy = true;
    v = std::clamp(v, 0.0, 1.0);
  }
  return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

bool is_png(std::span<const std::uint8_t> b) {
  static constexpr std::array<std::uint8_t, 8> kSig{0x89, 'P', 'N', 'G',
                                                    '\r', '\n', 0x1a, '\n'};
  return b.size() >= kSig.size() && std::equal(kSig.begin(), kSig.end(), b.begin());
}

ImageTensor decode_png(std::span<const std::uint8_t> bytes) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()))
    throw FormatError(std::string("malformed PNG: ") + img.message);

  int channels = 1;
  if (img.format & PNG_FORMAT_FLAG_COLOR) {
    img.format = (img.format & PNG_FORMAT_FLAG_ALPHA) ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
    channels = (img.format & PNG_FORMAT_FLAG_ALPHA) ? 4 : 3;
  } else {
    img.format = (img.format & PNG_FORMAT_FLAG_ALPHA) ? PNG_FORMAT_GA : PNG_FORMAT_GRAY;
    channels = (img.format & PNG_FORMAT_FLAG_ALPHA) ? 2 : 1;
  }
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw FormatError("malformed PNG: " + msg);
  }
  ImageTensor out(static_cast<Index>(img.height), static_cast<Index>(img.width),
                  channels);
  for (std::size_t i = 0; i < buf.size(); ++i) out.data()[i] = buf[i] / 255.0;
  return out;
}

// Whitespace/comment-aware token reader for PNM headers and ASCII rasters.
class PnmReader {
 public:
  explicit PnmReader(std::span<const std::uint8_t> b) : b_(b) {}

  long next_int() {
    skip_space();
    if (pos_ >= b_.size() || !std::isdigit(b_[pos_]))
      throw FormatError("malformed PNM: expected a number");
    long v = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + (b_[pos_++] - '0');
      if (v > 1'000'000'000) throw FormatError("malformed PNM: number too large");
    }
    return v;
  }

  // Binary rasters start after exactly one whitespace byte.
  std::span<const std::uint8_t> raster() {
    if (pos_ >= b_.size() || !std::isspace(b_[pos_]))
      throw FormatError("malformed PNM: missing raster separator");
    return b_.subspan(pos_ + 1);
  }

  std::size_t pos_ = 2;

 private:
  void skip_space() {
    while (pos_ < b_.size()) {
      if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else if (std::isspace(b_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> b_;
};

ImageTensor decode_pnm(std::span<const std::uint8_t> bytes) {
  const char kind = static_cast<char>(bytes[1]);
  const bool ascii = kind == '2' || kind == '3';
  const int channels = (kind == '2' || kind == '5') ? 1 : 3;
  PnmReader r(bytes);
  const long width = r.next_int();
  const long height = r.next_int();
  const long maxval = r.next_int();
  if (width <= 0 || height <= 0) throw FormatError("malformed PNM: empty image");
  if (maxval <= 0 || maxval > 65535) throw FormatError("malformed PNM: bad maxval");
  ImageTensor out(height, width, channels);
  const Index n = out.size();
  if (ascii) {
    for (Index i = 0; i < n; ++i) {
      const long v = r.next_int();
      if (v > maxval) throw FormatError("malformed PNM: sample exceeds maxval");
      out.data()[i] = static_cast<double>(v) / maxval;
    }
    return out;
  }
  const auto raster = r.raster();
  const std::size_t width_bytes = maxval > 255 ? 2 : 1;
  if (raster.size() < static_cast<std::size_t>(n) * width_bytes)
    throw FormatError("malformed PNM: truncated raster");
  for (Index i = 0; i < n; ++i) {
    long v = raster[i * width_bytes];
    if (width_bytes == 2) v = (v << 8) | raster[i * 2 + 1];
    if (v > maxval) throw FormatError("malformed PNM: sample exceeds maxval");
    out.data()[i] = static_cast<double>(v) / maxval;
  }
  return out;
}

}  // namespace

ImageTensor decode_image(std::span<const std::uint8_t> bytes) {
  if (is_png(bytes)) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' &&
      (bytes[1] == '2' || bytes[1] == '3' || bytes[1] == '5' || bytes[1] == '6'))
    return decode_pnm(bytes);
  throw FormatError("unrecognised image format");
}

ImageTensor read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_image(bytes);
}

EncodedImage encode_png(const ImageTensor& img) {
  png_image desc;
  std::memset(&desc, 0, sizeof(desc));
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(img.width());
  desc.height = static_cast<png_uint_32>(img.height());
  switch (img.channels()) {
    case 1: desc.format = PNG_FORMAT_GRAY; break;
    case 2: desc.format = PNG_FORMAT_GA; break;
    case 3: desc.format = PNG_FORMAT_RGB; break;
    case 4: desc.format = PNG_FORMAT_RGBA; break;
    default:
      throw FormatError("PNG supports 1 to 4 channels, got " +
                        std::to_string(img.channels()));
  }
  EncodedImage out;
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(img.size()));
  for (Index i = 0; i < img.size(); ++i) raw[i] = quantize(img.data()[i], &out.lossy);

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&desc, nullptr, &size, 0, raw.data(), 0, nullptr))
    throw FormatError(std::string("PNG encode failed: ") + desc.message);
  out.bytes.resize(size);
  if (!png_image_write_to_memory(&desc, out.bytes.data(), &size, 0, raw.data(), 0,
                                 nullptr))
    throw FormatError(std::string("PNG encode failed: ") + desc.message);
  out.bytes.resize(size);
  return out;
}

EncodedImage encode_pnm(const ImageTensor& img) {
  if (img.channels() != 1 && img.channels() != 3)
    throw FormatError("PNM supports 1 or 3 channels, got " +
                      std::to_string(img.channels()));
  EncodedImage out;
  std::ostringstream os;
  os << (img.channels() == 1 ? "P2" : "P3") << '\n'
     << img.width() << ' ' << img.height() << "\n255\n";
  const Index row = img.width() * img.channels();
  for (Index i = 0; i < img.size(); ++i) {
    os << static_cast<int>(quantize(img.data()[i], &out.lossy));
    os << ((i + 1) % row == 0 ? '\n' : ' ');
  }
  const std::string s = os.str();
  out.bytes.assign(s.begin(), s.end());
  return out;
}

bool write_image(const ImageTensor& img, const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  EncodedImage enc;
  if (ext == ".png") {
    enc = encode_png(img);
  } else if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
    enc = encode_pnm(img);
  } else {
    throw FormatError("unknown image extension: " + path);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(enc.bytes.data()),
            static_cast<std::streamsize>(enc.bytes.size()));
  return enc.lossy;
}

namespace {
constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i < bytes.size()) {
    std::uint32_t v = bytes[i] << 16;
    if (i + 1 < bytes.size()) v |= bytes[i + 1] << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += i + 1 < bytes.size() ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::string s = text;
  // Accept data URLs from browsers.
  if (s.rfind("data:", 0) == 0) {
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw FormatError("malformed data URL");
    s = s.substr(comma + 1);
  }
  std::vector<std::uint8_t> out;
  std::uint32_t acc = 0;
  int bits = 0;
  bool padded = false;
  for (char ch : s) {
    if (std::isspace(static_cast<unsigned char>(ch))) continue;
    if (ch == '=') {
      padded = true;
      continue;
    }
    if (padded) throw FormatError("malformed base64: data after padding");
    const char* p = std::strchr(kAlphabet, ch);
    if (p == nullptr || ch == '\0') throw FormatError("malformed base64");
    acc = (acc << 6) | static_cast<std::uint32_t>(p - kAlphabet);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xff));
    }
  }
  return out;
}

}  // namespace privrecon
