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

#include "privrecon/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace privrecon {

namespace {

constexpr char kMagic[4] = {'P', 'R', 'V', 'C'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {
      static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
      static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw FormatError("container truncated");
  }
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 |
         std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
}

Eigen::VectorXd to_vector(const std::vector<float>& v) {
  Eigen::VectorXd out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

Eigen::MatrixXd to_matrix(const std::vector<float>& v, Index rows,
                          Index cols) {
  if (static_cast<Index>(v.size()) != rows * cols) {
    throw FormatError("container array has wrong size");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < rows * cols; ++i) m.data()[i] = v[i];
  return m;
}

void expect_kind(const Container& c, const char* kind) {
  if (c.header.value("kind", "") != kind) {
    throw FormatError(std::string("container is not a ") + kind);
  }
}

}  // namespace

const std::vector<float>& Container::array(const std::string& name) const {
  for (const auto& [n, v] : arrays) {
    if (n == name) return v;
  }
  throw FormatError("container has no array '" + name + "'");
}

void Container::add(std::string name, const Eigen::VectorXd& values) {
  std::vector<float> v(values.size());
  for (Index i = 0; i < values.size(); ++i) v[i] = static_cast<float>(values[i]);
  arrays.emplace_back(std::move(name), std::move(v));
}

void write_container(std::ostream& out, const Container& c) {
  nlohmann::json header = c.header;
  header["arrays"] = nlohmann::json::array();
  for (const auto& [name, values] : c.arrays) {
    header["arrays"].push_back({{"name", name}, {"count", values.size()}});
  }
  const std::string text = header.dump();
  out.write(kMagic, 4);
  put_u32(out, Container::kVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& entry : c.arrays) {
    for (const float f : entry.second) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  if (!out) throw FormatError("failed writing container");
}

Container read_container(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("not a privrecon container (bad magic)");
  }
  const std::uint32_t version = get_u32(in);
  if (version != Container::kVersion) {
    throw FormatError("unsupported container version " +
                      std::to_string(version));
  }
  const std::uint32_t len = get_u32(in);
  std::string text(len, '\0');
  if (!in.read(text.data(), len)) throw FormatError("container truncated");
  Container c;
  try {
    c.header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("container header: ") + e.what());
  }
  if (!c.header.contains("arrays") || !c.header["arrays"].is_array()) {
    throw FormatError("container header lacks an array table");
  }
  for (const auto& entry : c.header["arrays"]) {
    const std::string name = entry.at("name").get<std::string>();
    const std::size_t count = entry.at("count").get<std::size_t>();
    std::vector<float> values(count);
    for (std::size_t i = 0; i < count; ++i) {
      values[i] = std::bit_cast<float>(get_u32(in));
    }
    c.arrays.emplace_back(name, std::move(values));
  }
  c.header.erase("arrays");
  return c;
}

void save_container(const std::string& path, const Container& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  write_container(out, c);
}

Container load_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return read_container(in);
}

nlohmann::json shape_to_json(const ImageShape& s) {
  return {s.height, s.width, s.channels};
}

ImageShape shape_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw FormatError("bad shape field");
  ImageShape s{j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
  validate_shape(s);
  return s;
}

Container dataset_container(const DatasetSpec& spec,
                            const std::vector<ImageTensor>& images) {
  Container c;
  c.header = {{"kind", "dataset"},
              {"shape", shape_to_json(spec.shape)},
              {"family", family_name(spec.family)},
              {"seed", spec.seed},
              {"pixel_noise", spec.pixel_noise},
              {"count", images.size()}};
  Eigen::VectorXd all(static_cast<Index>(images.size()) * spec.shape.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    all.segment(static_cast<Index>(i) * spec.shape.size(), spec.shape.size()) =
        images[i].data();
  }
  c.add("images", all);
  return c;
}

DatasetFile dataset_from_container(const Container& c) {
  expect_kind(c, "dataset");
  DatasetFile f;
  f.spec.shape = shape_from_json(c.header.at("shape"));
  f.spec.family = parse_family(c.header.at("family").get<std::string>());
  f.spec.seed = c.header.at("seed").get<std::uint64_t>();
  f.spec.pixel_noise = c.header.value("pixel_noise", 0.01);
  const auto count = c.header.at("count").get<std::size_t>();
  const Index d = f.spec.shape.size();
  const auto& data = c.array("images");
  if (data.size() != count * static_cast<std::size_t>(d)) {
    throw FormatError("dataset array size does not match header");
  }
  const Eigen::VectorXd all = to_vector(data);
  for (std::size_t i = 0; i < count; ++i) {
    f.images.emplace_back(f.spec.shape,
                          all.segment(static_cast<Index>(i) * d, d));
  }
  return f;
}

Container gmm_container(const GmmPrior& prior) {
  prior.validate();
  Container c;
  c.header = {{"kind", "gmm"},
              {"shape", shape_to_json(prior.shape)},
              {"components", prior.components.size()}};
  const Index k = static_cast<Index>(prior.components.size());
  Eigen::VectorXd w(k), var(k), means(k * prior.dimension());
  for (Index i = 0; i < k; ++i) {
    w[i] = prior.components[i].weight;
    var[i] = prior.components[i].variance;
    means.segment(i * prior.dimension(), prior.dimension()) =
        prior.components[i].mean;
  }
  c.add("weights", w);
  c.add("variances", var);
  c.add("means", means);
  return c;
}

GmmPrior gmm_from_container(const Container& c) {
  expect_kind(c, "gmm");
  GmmPrior prior;
  prior.shape = shape_from_json(c.header.at("shape"));
  const auto k = c.header.at("components").get<Index>();
  const Index d = prior.dimension();
  const Eigen::VectorXd w = to_vector(c.array("weights"));
  const Eigen::VectorXd var = to_vector(c.array("variances"));
  const Eigen::MatrixXd means = to_matrix(c.array("means"), d, k);
  if (w.size() != k || var.size() != k) {
    throw FormatError("gmm arrays do not match component count");
  }
  const double total = w.sum();
  for (Index i = 0; i < k; ++i) {
    prior.components.push_back({w[i] / total, means.col(i), var[i]});
  }
  prior.validate();
  return prior;
}

Container denoiser_container(const ToyDenoiser& model) {
  Container c;
  c.header = {{"kind", "toy-denoiser"},
              {"shape", shape_to_json(model.shape())},
              {"hidden", model.hidden()},
              {"time_embedding", ToyDenoiser::kTimeEmbedding}};
  const auto& p = model.parameters();
  auto flat = [](const Eigen::MatrixXd& m) {
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()));
  };
  c.add("w1", flat(p.w1));
  c.add("b1", p.b1);
  c.add("w2", flat(p.w2));
  c.add("b2", p.b2);
  c.add("w3", flat(p.w3));
  c.add("b3", p.b3);
  c.add("skip", flat(p.skip));
  return c;
}

ToyDenoiser denoiser_from_container(const Container& c) {
  expect_kind(c, "toy-denoiser");
  const ImageShape shape = shape_from_json(c.header.at("shape"));
  const Index h = c.header.at("hidden").get<Index>();
  const Index d = shape.size();
  ToyDenoiser::Parameters p;
  p.w1 = to_matrix(c.array("w1"), h, d + ToyDenoiser::kTimeEmbedding);
  p.b1 = to_vector(c.array("b1"));
  p.w2 = to_matrix(c.array("w2"), h, h);
  p.b2 = to_vector(c.array("b2"));
  p.w3 = to_matrix(c.array("w3"), d, h);
  p.b3 = to_vector(c.array("b3"));
  p.skip = to_matrix(c.array("skip"), d, d);
  return ToyDenoiser(shape, std::move(p));
}

Container latent_container(const ImageTensor& latent) {
  Container c;
  c.header = {{"kind", "latent"}, {"shape", shape_to_json(latent.shape())}};
  c.add("data", latent.data());
  return c;
}

ImageTensor latent_from_container(const Container& c) {
  expect_kind(c, "latent");
  const ImageShape shape = shape_from_json(c.header.at("shape"));
  return ImageTensor(shape, to_vector(c.array("data")));
}

}  // namespace privrecon
