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

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "privrecon/image.hpp"
#include "privrecon/priors.hpp"
#include "privrecon/toy_denoiser.hpp"

namespace privrecon {

// Binary layout, all integers little-endian:
//   "PRVC" | u32 version | u32 header_bytes | JSON header | float32 arrays
// The header's "arrays" list gives each array's name and element count, in
// storage order.
struct Container {
  static constexpr std::uint32_t kVersion = 1;

  nlohmann::json header = nlohmann::json::object();
  std::vector<std::pair<std::string, std::vector<float>>> arrays;

  const std::vector<float>& array(const std::string& name) const;
  void add(std::string name, const Eigen::VectorXd& values);
};

void write_container(std::ostream& out, const Container& c);
Container read_container(std::istream& in);
void save_container(const std::string& path, const Container& c);
Container load_container(const std::string& path);

struct DatasetFile {
  DatasetSpec spec;
  std::vector<ImageTensor> images;
};

Container dataset_container(const DatasetSpec& spec,
                            const std::vector<ImageTensor>& images);
DatasetFile dataset_from_container(const Container& c);

Container gmm_container(const GmmPrior& prior);
GmmPrior gmm_from_container(const Container& c);

Container denoiser_container(const ToyDenoiser& model);
ToyDenoiser denoiser_from_container(const Container& c);

Container latent_container(const ImageTensor& latent);
ImageTensor latent_from_container(const Container& c);

nlohmann::json shape_to_json(const ImageShape& s);
ImageShape shape_from_json(const nlohmann::json& j);

}  // namespace privrecon
