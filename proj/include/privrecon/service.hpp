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
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "privrecon/priors.hpp"

namespace httplib {
class Server;
}

namespace privrecon {

// A GMM prior the service fits at start-up.
struct ServicePriorSpec {
  std::string name;
  DatasetSpec dataset;
  int components = 16;
  int train_size = 2000;
};

struct ServiceOptions {
  std::vector<ServicePriorSpec> priors = default_service_priors();
  // Extra priors loaded from GMM containers; named after the file stem.
  std::vector<std::string> prior_files;
  // Sweep reports are written under <data_dir>/reports/<job id> when set.
  std::string data_dir;
  std::uint64_t seed = 0;

  static std::vector<ServicePriorSpec> default_service_priors();
};

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

// Request handling for the audit HTTP API. Priors are immutable after
// construction; the sweep job store is the only mutable state.
class AuditService {
 public:
  explicit AuditService(const ServiceOptions& options);
  ~AuditService();
  AuditService(const AuditService&) = delete;
  AuditService& operator=(const AuditService&) = delete;

  ServiceResponse handle(const std::string& method, const std::string& path,
                         const std::string& body);

  // Routes every request on `server` through handle().
  void mount(httplib::Server& server);

  // Blocks until the job leaves the running state. Test helper.
  void wait(const std::string& job_id);

 private:
  struct State;
  std::unique_ptr<State> state_;
};

// Binds host:port and serves until the process exits. Port 0 picks a free
// port; `on_bound` receives the actual one.
void serve(const std::string& host, int port, const ServiceOptions& options,
           void (*on_bound)(int port) = nullptr);

}  // namespace privrecon
