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

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "privrecon/image.hpp"

namespace privrecon {

enum class ImageFormat { kPng, kPnm };

struct EncodedImage {
  std::vector<std::uint8_t> bytes;
  // True when some value fell outside [0, 1] (or was not finite) and was
  // clamped before 8-bit quantisation.
  bool lossy = false;
};

// PNG (8-bit gray, gray+alpha, RGB, RGBA) or PNM (P2/P3 ASCII, P5/P6 binary),
// told apart by their magic bytes. Values are mapped to [0, 1].
ImageTensor decode_image(std::span<const std::uint8_t> bytes);
ImageTensor read_image(const std::string& path);

EncodedImage encode_png(const ImageTensor& img);
// ASCII P2 (one channel) or P3 (three channels), maxval 255.
EncodedImage encode_pnm(const ImageTensor& img);

// Format from the extension: .png, or .pgm/.ppm/.pnm. Returns the lossy flag.
bool write_image(const ImageTensor& img, const std::string& path);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace privrecon
