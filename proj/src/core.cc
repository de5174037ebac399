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

#include "privrecon/metrics.hpp"
#include "privrecon/random.hpp"

namespace privrecon {

RngSeed derive_seed(RngSeed base, std::uint64_t stream) {
  std::uint64_t z = base.value + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return RngSeed{z ^ (z >> 31)};
}

Metric parse_metric(const std::string& name) {
  if (name == "mse" || name == "MSE") return Metric::kMse;
  if (name == "ssim" || name == "SSIM") return Metric::kSsim;
  throw ArgumentError("unknown metric '" + name + "'");
}

}  // namespace privrecon
