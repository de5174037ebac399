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

#include <thread>

#include <gtest/gtest.h>

#include "privrecon/image_io.hpp"
#include "privrecon/random.hpp"
#include "privrecon/service.hpp"

#include "httplib.h"

namespace privrecon {
namespace {

using nlohmann::json;

class ServiceTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    ServiceOptions opts;
    ServicePriorSpec tiny;
    tiny.name = "tiny";
    tiny.dataset.shape = {4, 4, 1};
    tiny.components = 4;
    tiny.train_size = 200;
    opts.priors = {tiny};
    service_ = new AuditService(opts);
    server_ = new httplib::Server;
    service_->mount(*server_);
    port_ = server_->bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = new std::thread([] { server_->listen_after_bind(); });
    server_->wait_until_ready();
  }
  static void TearDownTestSuite() {
    server_->stop();
    thread_->join();
    delete thread_;
    delete server_;
    delete service_;
  }

  static httplib::Client client() {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(120);
    return c;
  }
  static std::pair<int, json> get(const std::string& path) {
    auto res = client().Get(path);
    EXPECT_TRUE(res);
    return {res->status, json::parse(res->body)};
  }
  static std::pair<int, json> post(const std::string& path, const std::string& body) {
    auto res = client().Post(path, body, "application/json");
    EXPECT_TRUE(res);
    return {res->status, json::parse(res->body)};
  }

  static AuditService* service_;
  static httplib::Server* server_;
  static std::thread* thread_;
  static int port_;
};
AuditService* ServiceTest::service_ = nullptr;
httplib::Server* ServiceTest::server_ = nullptr;
std::thread* ServiceTest::thread_ = nullptr;
int ServiceTest::port_ = 0;

TEST_F(ServiceTest, Health) {
  const auto [status, body] = get("/health");
  EXPECT_EQ(status, 200);
  EXPECT_EQ(body["status"], "ok");
}

TEST_F(ServiceTest, DatasetsAndPriors) {
  const auto [ds, datasets] = get("/datasets");
  EXPECT_EQ(ds, 200);
  EXPECT_EQ(datasets["datasets"].size(), 3u);
  const auto [ps, priors] = get("/priors");
  EXPECT_EQ(ps, 200);
  ASSERT_EQ(priors["priors"].size(), 1u);
  EXPECT_EQ(priors["priors"][0]["name"], "tiny");
  EXPECT_EQ(priors["priors"][0]["components"], 4);
}

TEST_F(ServiceTest, NoiselessAttackReturnsUpload) {
  Rng rng(RngSeed{3});
  ImageTensor x(4, 4, 1);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = std::round(255 * rng.uniform()) / 255;
  const json req = {{"image", base64_encode(encode_png(x).bytes)}, {"sigma", 0.0}, {"C", 1.0}};
  const auto [status, body] = post("/attack", req.dump());
  ASSERT_EQ(status, 200) << body.dump();
  const auto rec = decode_image(base64_decode(body["reconstruction"]["png"].get<std::string>()));
  EXPECT_EQ(rec.data(), x.data());
  EXPECT_EQ(body["num_steps"], 0);
  EXPECT_TRUE(body["mu"].is_null());
  EXPECT_DOUBLE_EQ(body["metrics"]["reconstruction"]["mse"].get<double>(), 0.0);
  EXPECT_EQ(body["reconstruction_values"].size(), 16u);
}

TEST_F(ServiceTest, NoisyAttackOnDatasetSample) {
  const json req = {{"dataset_sample", {{"index", 2}}}, {"mu", 10.0},
                    {"accountant", {{"T", 1}, {"p", 1.0}, {"delta", 1e-5}}}};
  const auto [status, body] = post("/attack", req.dump());
  ASSERT_EQ(status, 200) << body.dump();
  EXPECT_GT(body["t_start"].get<int>(), 0);
  EXPECT_GT(body["epsilon"].get<double>(), 0.0);
  EXPECT_LT(body["metrics"]["reconstruction"]["mse"].get<double>(),
            body["metrics"]["noisy"]["mse"].get<double>());
}

TEST_F(ServiceTest, ConsensusAndUnknownLambda) {
  const json req = {{"dataset_sample", {{"index", 0}}}, {"mu", 5.0}, {"mode", "consensus"},
                    {"k", 3}, {"lambda_known", false}, {"grid_size", 20}};
  const auto [status, body] = post("/attack", req.dump());
  ASSERT_EQ(status, 200) << body.dump();
  EXPECT_EQ(body["samples"].size(), 3u);
  EXPECT_EQ(body["lambda_candidates"].size(), 20u);
  EXPECT_EQ(body["consistency"]["metric"], "mse");
}

TEST_F(ServiceTest, AccountantRoundTrip) {
  const auto [s1, fwd] = post("/accountant", R"({"mu": 1.0, "T": 1, "p": 1.0})");
  ASSERT_EQ(s1, 200) << fwd.dump();
  const double eps = fwd["epsilon"];
  const auto [s2, back] = post("/accountant", json{{"epsilon", eps}, {"T", 1}, {"p", 1.0}}.dump());
  ASSERT_EQ(s2, 200);
  EXPECT_NEAR(back["mu"].get<double>(), 1.0, 0.005);
}

TEST_F(ServiceTest, SweepJobLifecycle) {
  const json cfg = {{"dataset", {{"height", 4}, {"width", 4}}}, {"mus", {2.0, 20.0}},
                    {"trials", 2}, {"prior_components", 4}, {"train_size", 100},
                    {"reference_size", 20}};
  const auto [status, body] = post("/sweep", cfg.dump());
  ASSERT_EQ(status, 202) << body.dump();
  const std::string id = body["job_id"];
  service_->wait(id);
  const auto [js, job] = get("/jobs/" + id);
  EXPECT_EQ(js, 200);
  ASSERT_EQ(job["status"], "done") << job.dump();
  const auto [rs, report] = get(job["report"].get<std::string>());
  EXPECT_EQ(rs, 200);
  EXPECT_EQ(report["rows"].size(), 2u);
}

TEST_F(ServiceTest, StructuredErrors) {
  auto check = [](std::pair<int, json> r, int status, const std::string& type) {
    EXPECT_EQ(r.first, status) << r.second.dump();
    EXPECT_EQ(r.second["error"]["type"], type);
    EXPECT_TRUE(r.second["error"]["message"].is_string());
  };
  check(get("/nope"), 404, "NotFound");
  check(get("/jobs/job-999"), 404, "NotFound");
  check(post("/attack", "{not json"), 400, "MalformedRequest");
  check(post("/attack", R"({"image": "!!!"})"), 400, "FormatError");
  check(post("/attack", R"({"dataset_sample": {}, "mu": 1, "sigma": 1})"), 400, "ArgumentError");
  check(post("/attack", R"({"dataset_sample": {}, "sigma": 1e6})"), 422, "ScheduleOverflowError");
  check(post("/accountant", R"({"epsilon": 1e-9})"), 422, "EpsilonRangeError");
  check(post("/accountant", R"({"mu": 0})"), 422, "DegenerateParameterError");
  check(post("/sweep", R"({"mus": []})"), 400, "ArgumentError");
}

TEST_F(ServiceTest, CorsPreflight) {
  auto res = client().Options("/attack");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 204);
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
}

}  // namespace
}  // namespace privrecon
