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

#include "privrecon/service.hpp"

#include <condition_variable>
#include <filesystem>
#include <map>
#include <mutex>
#include <regex>
#include <thread>

#include "httplib.h"

#include "privrecon/accountant.hpp"
#include "privrecon/baselines.hpp"
#include "privrecon/container.hpp"
#include "privrecon/errors.hpp"
#include "privrecon/experiment.hpp"
#include "privrecon/image_io.hpp"

namespace privrecon {

namespace {

using nlohmann::json;

constexpr int kMaxDatasetIndex = 100000;

struct NotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LoadedPrior {
  std::string name;
  std::string family;
  GmmPrior gmm;
  std::shared_ptr<const GmmPredictor> predictor;
};

json error_body(const std::string& type, const std::string& message) {
  return {{"error", {{"type", type}, {"message", message}}}};
}

json image_json(const ImageTensor& img) {
  const auto enc = encode_png(img);
  return {{"png", base64_encode(enc.bytes)}, {"lossy", enc.lossy}};
}

bool ssim_fits(const ImageShape& s) {
  const SsimOptions o;
  return s.height >= o.window && s.width >= o.window;
}

json metrics_json(const ImageTensor& a, const ImageTensor& target) {
  json m = {{"mse", mse(a, target)}};
  if (ssim_fits(target.shape())) m["ssim"] = ssim(a, target);
  return m;
}

double number(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw ArgumentError(std::string(key) + " must be a number");
  return v.get<double>();
}

}  // namespace

std::vector<ServicePriorSpec> ServiceOptions::default_service_priors() {
  ServicePriorSpec small;
  small.name = "blobs-a-8x8";
  ServicePriorSpec large;
  large.name = "blobs-a-16x16";
  large.dataset.shape = {16, 16, 1};
  return {small, large};
}

struct AuditService::State {
  ServiceOptions options;
  NoiseSchedule schedule = default_schedule();
  std::vector<LoadedPrior> priors;

  enum class JobStatus { kRunning, kDone, kFailed };
  struct Job {
    JobStatus status = JobStatus::kRunning;
    std::string error;
    std::shared_ptr<const SweepReport> report;
  };
  std::mutex mu;
  std::condition_variable cv;
  std::map<std::string, Job> jobs;
  std::vector<std::thread> workers;
  int next_job = 1;

  const LoadedPrior& find_prior(const json& req, const ImageShape* shape) const {
    if (req.contains("prior")) {
      const auto name = req.at("prior").get<std::string>();
      for (const auto& p : priors)
        if (p.name == name) return p;
      throw NotFound("unknown prior: " + name);
    }
    if (shape == nullptr) return priors.front();
    for (const auto& p : priors)
      if (p.gmm.shape == *shape) return p;
    throw DimensionError("no prior for image shape " + shape->to_string());
  }

  json health() const { return {{"status", "ok"}}; }

  json datasets() const {
    json out = json::array();
    for (auto f : {DatasetFamily::kBlobsA, DatasetFamily::kBlobsB, DatasetFamily::kBars})
      out.push_back({{"family", family_name(f)}});
    return {{"datasets", out}};
  }

  json prior_list() const {
    json out = json::array();
    for (const auto& p : priors) {
      out.push_back({{"name", p.name},
                     {"family", p.family},
                     {"shape", shape_to_json(p.gmm.shape)},
                     {"components", p.gmm.components.size()}});
    }
    return {{"priors", out}};
  }

  json accountant(const json& req) const {
    AccountantConfig cfg;
    cfg.steps = req.value("T", cfg.steps);
    cfg.sampling_prob = req.value("p", cfg.sampling_prob);
    cfg.delta = req.value("delta", cfg.delta);
    cfg.validate();
    json out = {{"T", cfg.steps}, {"p", cfg.sampling_prob}, {"delta", cfg.delta}};
    if (req.contains("mu")) {
      const double mu = number(req, "mu");
      const auto r = mu_to_epsilon(mu, cfg);
      out["mu"] = mu;
      out["epsilon"] = r.epsilon;
      out["best_order"] = r.best_order;
    } else if (req.contains("epsilon")) {
      const double eps = number(req, "epsilon");
      out["epsilon"] = eps;
      out["mu"] = epsilon_to_mu(eps, cfg);
    } else {
      throw ArgumentError("accountant request needs mu or epsilon");
    }
    return out;
  }

  json attack(const json& req) const {
    ImageTensor target;
    const LoadedPrior* prior = nullptr;
    if (req.contains("image")) {
      target = decode_image(base64_decode(req.at("image").get<std::string>()));
      prior = &find_prior(req, &target.shape());
    } else if (req.contains("dataset_sample")) {
      prior = &find_prior(req, nullptr);
      const auto& ref = req.at("dataset_sample");
      DatasetSpec spec;
      spec.family = parse_family(ref.value("family", prior->family));
      spec.shape = prior->gmm.shape;
      spec.seed = ref.value("seed", std::uint64_t{0});
      const int index = ref.value("index", 0);
      if (index < 0 || index >= kMaxDatasetIndex)
        throw ArgumentError("dataset_sample index out of range");
      target = generate_dataset(spec, index + 1).back();
    } else {
      throw ArgumentError("attack request needs image or dataset_sample");
    }
    if (target.shape() != prior->gmm.shape)
      throw DimensionError("image shape " + target.shape().to_string() +
                           " does not match prior " + prior->name);

    PrivacyParams params;
    params.clip_norm = req.contains("C") ? number(req, "C") : 1.0;
    if (req.contains("sigma") && req.contains("mu"))
      throw ArgumentError("give sigma or mu, not both");
    if (req.contains("mu")) {
      params = PrivacyParams::from_mu(number(req, "mu"), params.clip_norm);
    } else if (req.contains("sigma")) {
      params.noise_multiplier = number(req, "sigma");
    } else {
      throw ArgumentError("attack request needs sigma or mu");
    }
    params.validate();

    const std::string mode = req.value("mode", std::string("ddim"));
    const bool consensus = mode == "consensus";
    const SamplerMode sampler = consensus ? SamplerMode::kDdpm : parse_sampler(mode);
    const bool lambda_known = req.value("lambda_known", true);
    const RngSeed seed{req.value("seed", std::uint64_t{0})};

    const auto obs = privatize(target, params, derive_seed(seed, 1));
    json out;
    out["prior"] = prior->name;
    out["C"] = params.clip_norm;
    out["sigma"] = params.noise_multiplier;
    out["mu"] = params.noise_multiplier > 0.0 ? json(params.mu()) : json(nullptr);
    out["lambda_true"] = *obs.lambda;
    out["lambda_known"] = lambda_known;
    out["mode"] = mode;

    ReconstructOptions opts;
    if (!lambda_known) {
      LambdaSearchOptions lo;
      lo.grid_size = req.value("grid_size", lo.grid_size);
      lo.reconstruct = false;
      lo.mode = sampler;
      lo.seed = derive_seed(seed, 2);
      const auto search = approximate_lambda(obs, schedule, *prior->predictor, lo);
      json table = json::array();
      for (const auto& c : search.candidates) {
        table.push_back({{"lambda", c.lambda},
                         {"sigma_hat", c.sigma_hat},
                         {"t_start", c.t_start},
                         {"score", c.score ? json(*c.score) : json(nullptr)}});
      }
      out["lambda_candidates"] = table;
      if (!search.lambda_hat)
        throw MissingKnowledgeError("no lambda candidate could be scored");
      opts.lambda = *search.lambda_hat;
    }

    ImageTensor rec;
    if (consensus) {
      const int k = req.value("k", 5);
      if (k < 2 || k > 64) throw ArgumentError("k must lie in [2, 64]");
      const Metric metric = ssim_fits(target.shape()) ? Metric::kSsim : Metric::kMse;
      auto cons = consensus_reconstruct(obs, schedule, *prior->predictor, k,
                                        derive_seed(seed, 3), metric, opts);
      json samples = json::array();
      for (const auto& s : cons.samples) samples.push_back(image_json(s));
      out["samples"] = samples;
      out["consistency"] = {{"metric", metric_name(metric)},
                            {"value", cons.mean_pairwise.value}};
      rec = std::move(cons.consensus);
      const double lambda = opts.lambda.value_or(*obs.lambda);
      const double sigma_hat = obs.noise_std() * lambda;
      const int t =
          sigma_hat < schedule.sigma(1) ? 0 : match_markov_state(sigma_hat, schedule);
      out["t_start"] = t;
      out["lambda"] = lambda;
    } else {
      const auto r = reconstruct(obs, schedule, *prior->predictor, sampler,
                                 derive_seed(seed, 3), opts);
      rec = r.image;
      out["t_start"] = r.t_start;
      out["num_steps"] = r.num_steps;
      out["lambda"] = r.lambda_used;
    }

    if (params.noise_multiplier > 0.0) {
      AccountantConfig ac;
      if (req.contains("accountant")) {
        const auto& a = req.at("accountant");
        ac.steps = a.value("T", ac.steps);
        ac.sampling_prob = a.value("p", ac.sampling_prob);
        ac.delta = a.value("delta", ac.delta);
      }
      try {
        out["epsilon"] = mu_to_epsilon(params.mu(), ac).epsilon;
      } catch (const AccountantOverflowError&) {
        out["epsilon"] = nullptr;
      }
    } else {
      out["epsilon"] = nullptr;
    }

    const ImageTensor noisy = rescaled_observation(obs, opts.lambda);
    out["original"] = image_json(target);
    out["noisy"] = image_json(noisy);
    out["reconstruction"] = image_json(rec);
    out["shape"] = shape_to_json(target.shape());
    out["reconstruction_values"] =
        std::vector<double>(rec.data().data(), rec.data().data() + rec.size());
    out["metrics"] = {{"reconstruction", metrics_json(rec, target)},
                      {"noisy", metrics_json(noisy, target)}};
    return out;
  }

  json submit_sweep(const json& req) {
    ExperimentConfig cfg = config_from_json(req);
    cfg.validate();
    std::string id;
    {
      std::lock_guard lock(mu);
      id = "job-" + std::to_string(next_job++);
      jobs[id] = Job{};
    }
    if (!options.data_dir.empty() && cfg.output_dir.empty())
      cfg.output_dir =
          (std::filesystem::path(options.data_dir) / "reports" / id).string();
    std::lock_guard lock(mu);
    workers.emplace_back([this, id, cfg] {
      Job done;
      try {
        done.report = std::make_shared<const SweepReport>(run_sweep(cfg));
        done.status = JobStatus::kDone;
      } catch (const std::exception& e) {
        done.status = JobStatus::kFailed;
        done.error = e.what();
      }
      {
        std::lock_guard inner(mu);
        jobs[id] = std::move(done);
      }
      cv.notify_all();
    });
    return {{"job_id", id}, {"status", "running"}};
  }

  Job job(const std::string& id) {
    std::lock_guard lock(mu);
    auto it = jobs.find(id);
    if (it == jobs.end()) throw NotFound("unknown job: " + id);
    return it->second;
  }

  json job_status(const std::string& id) {
    const Job j = job(id);
    json out = {{"job_id", id}};
    switch (j.status) {
      case JobStatus::kRunning: out["status"] = "running"; break;
      case JobStatus::kDone:
        out["status"] = "done";
        out["report"] = "/report/" + id;
        break;
      case JobStatus::kFailed:
        out["status"] = "failed";
        out["error"] = j.error;
        break;
    }
    return out;
  }

  json report(const std::string& id) {
    const Job j = job(id);
    if (j.status != JobStatus::kDone || !j.report)
      throw NotFound("report not ready: " + id);
    return report_to_json(*j.report);
  }
};

AuditService::AuditService(const ServiceOptions& options)
    : state_(std::make_unique<State>()) {
  state_->options = options;
  int i = 0;
  for (const auto& spec : options.priors) {
    DatasetSpec train = spec.dataset;
    train.seed = derive_seed(RngSeed{options.seed}, 100 + i).value;
    EmOptions em;
    em.train_size = spec.train_size;
    auto fit = fit_gmm_from_dataset(train, spec.components,
                                    derive_seed(RngSeed{options.seed}, 200 + i), em);
    state_->priors.push_back(
        {spec.name, family_name(spec.dataset.family), fit.prior,
         std::make_shared<GmmPredictor>(fit.prior, state_->schedule)});
    ++i;
  }
  for (const auto& path : options.prior_files) {
    auto gmm = gmm_from_container(load_container(path));
    state_->priors.push_back({std::filesystem::path(path).stem().string(), "file", gmm,
                              std::make_shared<GmmPredictor>(gmm, state_->schedule)});
  }
  if (state_->priors.empty()) throw ArgumentError("service needs at least one prior");
}

AuditService::~AuditService() {
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(state_->mu);
    workers.swap(state_->workers);
  }
  for (auto& t : workers) t.join();
}

void AuditService::wait(const std::string& job_id) {
  std::unique_lock lock(state_->mu);
  state_->cv.wait(lock, [&] {
    auto it = state_->jobs.find(job_id);
    return it == state_->jobs.end() || it->second.status != State::JobStatus::kRunning;
  });
}

ServiceResponse AuditService::handle(const std::string& method,
                                     const std::string& path,
                                     const std::string& body) {
  static const std::regex kJob("^/jobs/([A-Za-z0-9_-]+)$");
  static const std::regex kReport("^/report/([A-Za-z0-9_-]+)$");
  State& s = *state_;
  auto parse = [&] {
    json j = json::parse(body.empty() ? std::string("{}") : body);
    if (!j.is_object()) throw FormatError("request body must be a JSON object");
    return j;
  };
  try {
    std::smatch m;
    if (method == "GET") {
      if (path == "/health") return {200, s.health()};
      if (path == "/datasets") return {200, s.datasets()};
      if (path == "/priors") return {200, s.prior_list()};
      if (std::regex_match(path, m, kJob)) return {200, s.job_status(m[1])};
      if (std::regex_match(path, m, kReport)) return {200, s.report(m[1])};
    } else if (method == "POST") {
      if (path == "/attack") return {200, s.attack(parse())};
      if (path == "/accountant") return {200, s.accountant(parse())};
      if (path == "/sweep") return {202, s.submit_sweep(parse())};
    }
    return {404, error_body("NotFound", method + " " + path)};
  } catch (const NotFound& e) {
    return {404, error_body("NotFound", e.what())};
  } catch (const json::exception& e) {
    return {400, error_body("MalformedRequest", e.what())};
  } catch (const FormatError& e) {
    return {400, error_body("FormatError", e.what())};
  } catch (const DimensionError& e) {
    return {400, error_body("DimensionError", e.what())};
  } catch (const ArgumentError& e) {
    return {400, error_body("ArgumentError", e.what())};
  } catch (const DegenerateParameterError& e) {
    return {422, error_body("DegenerateParameterError", e.what())};
  } catch (const ScheduleOverflowError& e) {
    return {422, error_body("ScheduleOverflowError", e.what())};
  } catch (const EpsilonRangeError& e) {
    return {422, error_body("EpsilonRangeError", e.what())};
  } catch (const AccountantOverflowError& e) {
    return {422, error_body("AccountantOverflowError", e.what())};
  } catch (const MissingKnowledgeError& e) {
    return {422, error_body("MissingKnowledgeError", e.what())};
  } catch (const std::exception& e) {
    return {500, error_body("InternalError", e.what())};
  }
}

void AuditService::mount(httplib::Server& server) {
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const auto r = handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get(".*", route);
  server.Post(".*", route);
  server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
}

void serve(const std::string& host, int port, const ServiceOptions& options,
           void (*on_bound)(int port)) {
  AuditService service(options);
  httplib::Server server;
  service.mount(server);
  int bound = port;
  if (port == 0) {
    bound = server.bind_to_any_port(host);
  } else if (!server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0)
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  if (on_bound != nullptr) on_bound(bound);
  server.listen_after_bind();
}

}  // namespace privrecon
