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
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "privrecon/accountant.hpp"
#include "privrecon/baselines.hpp"
#include "privrecon/container.hpp"
#include "privrecon/diffusion.hpp"
#include "privrecon/dp_release.hpp"
#include "privrecon/errors.hpp"
#include "privrecon/experiment.hpp"
#include "privrecon/image_io.hpp"
#include "privrecon/priors.hpp"
#include "privrecon/service.hpp"
#include "privrecon/toy_denoiser.hpp"

namespace fs = std::filesystem;
using namespace privrecon;
using nlohmann::json;

namespace {

struct DatasetFlags {
  std::string family = "blobs-a";
  int height = 8;
  int width = 8;
  int channels = 1;
  double pixel_noise = 0.01;

  void add(CLI::App* app) {
    app->add_option("--family", family, "blobs-a, blobs-b or bars")->capture_default_str();
    app->add_option("--height", height)->capture_default_str();
    app->add_option("--width", width)->capture_default_str();
    app->add_option("--channels", channels)->capture_default_str();
    app->add_option("--pixel-noise", pixel_noise)->capture_default_str();
  }

  DatasetSpec spec(std::uint64_t seed) const {
    DatasetSpec s;
    s.family = parse_family(family);
    s.shape = {height, width, channels};
    s.pixel_noise = pixel_noise;
    s.seed = seed;
    return s;
  }
};

std::string in_data_dir(const std::string& name) {
  return (fs::path(default_data_dir()) / name).string();
}

void ensure_parent(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void bound_message(int port) {
  std::printf("listening on port %d\n", port);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reconstruction attacks on DP-SGD releases with diffusion priors"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Seed for every random draw")->capture_default_str();
  app.fallthrough();

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  DatasetFlags gen_ds;
  gen_ds.add(gen);
  int gen_count = 2000;
  std::string gen_out = in_data_dir("dataset.prvc");
  std::string gen_png_dir;
  gen->add_option("--count", gen_count)->capture_default_str();
  gen->add_option("--out", gen_out)->capture_default_str();
  gen->add_option("--png-dir", gen_png_dir, "Also write every image as PNG");

  // fit-prior
  auto* fit = app.add_subcommand("fit-prior", "Fit a GMM prior with EM");
  DatasetFlags fit_ds;
  fit_ds.add(fit);
  int fit_k = 16;
  int fit_train = 2000;
  std::string fit_data;
  std::string fit_out = in_data_dir("prior.prvc");
  fit->add_option("--components", fit_k)->capture_default_str();
  fit->add_option("--train-size", fit_train)->capture_default_str();
  fit->add_option("--data", fit_data, "Dataset container to fit on");
  fit->add_option("--out", fit_out)->capture_default_str();

  // train-denoiser
  auto* train = app.add_subcommand("train-denoiser", "Train the toy noise predictor");
  DatasetFlags train_ds;
  train_ds.add(train);
  ToyTrainConfig toy;
  std::string train_out = in_data_dir("denoiser.prvc");
  train->add_option("--hidden", toy.hidden)->capture_default_str();
  train->add_option("--steps", toy.steps)->capture_default_str();
  train->add_option("--batch-size", toy.batch_size)->capture_default_str();
  train->add_option("--lr", toy.learning_rate)->capture_default_str();
  train->add_option("--train-size", toy.dataset_size)->capture_default_str();
  train->add_option("--out", train_out)->capture_default_str();

  // attack
  auto* attack = app.add_subcommand("attack", "Reconstruct one image from its release");
  DatasetFlags att_ds;
  att_ds.add(attack);
  std::string att_image, att_prior, att_denoiser;
  int att_index = 0;
  double att_clip = 1.0;
  std::optional<double> att_sigma, att_mu;
  std::string att_mode = "ddim";
  int att_k = 5;
  bool att_lambda_unknown = false;
  int att_components = 16;
  std::string att_out = in_data_dir("attack");
  attack->add_option("--image", att_image, "PNG/PGM/PPM target");
  attack->add_option("--index", att_index, "Dataset sample used when --image is absent")
      ->capture_default_str();
  auto* prior_opt = attack->add_option("--prior", att_prior, "GMM prior container");
  attack->add_option("--denoiser", att_denoiser, "Toy denoiser container")
      ->excludes(prior_opt);
  attack->add_option("--components", att_components,
                     "Components when fitting a prior on the fly")
      ->capture_default_str();
  attack->add_option("--clip", att_clip, "Clipping norm C")->capture_default_str();
  auto* sigma_opt = attack->add_option("--sigma", att_sigma, "Noise multiplier");
  attack->add_option("--mu", att_mu, "C / sigma")->excludes(sigma_opt);
  attack->add_option("--mode", att_mode, "ddim, ddpm or consensus")->capture_default_str();
  attack->add_option("--k", att_k, "Consensus samples")->capture_default_str();
  attack->add_flag("--lambda-unknown", att_lambda_unknown,
                   "Search the clipping factor instead of using it");
  attack->add_option("--out-dir", att_out)->capture_default_str();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run a privacy sweep and write a report");
  DatasetFlags sw_ds;
  sw_ds.add(sweep);
  std::string sw_config;
  std::string sw_source = "exact-gmm";
  std::vector<double> sw_mus{3, 5, 10, 20, 50, 100};
  std::string sw_attack = "single";
  std::string sw_sampler = "ddim";
  std::vector<std::string> sw_metrics{"mse"};
  int sw_trials = 50;
  int sw_components = 16;
  int sw_k = 5;
  bool sw_lambda_unknown = false;
  std::optional<std::string> sw_target;
  std::string sw_out = in_data_dir("sweep");
  sweep->add_option("--config", sw_config, "JSON ExperimentConfig (flags are ignored)");
  sweep->add_option("--prior-source", sw_source, "exact-gmm, gmm-fit or toy-denoiser")
      ->capture_default_str();
  sweep->add_option("--target-family", sw_target);
  sweep->add_option("--mus", sw_mus)->delimiter(',')->capture_default_str();
  sweep->add_option("--attack", sw_attack, "single, batch-binning or consensus")
      ->capture_default_str();
  sweep->add_option("--sampler", sw_sampler)->capture_default_str();
  sweep->add_option("--metrics", sw_metrics)->delimiter(',')->capture_default_str();
  sweep->add_option("--trials", sw_trials)->capture_default_str();
  sweep->add_option("--components", sw_components)->capture_default_str();
  sweep->add_option("--k", sw_k)->capture_default_str();
  sweep->add_flag("--lambda-unknown", sw_lambda_unknown);
  sweep->add_option("--out-dir", sw_out)->capture_default_str();

  // rero
  auto* rero = app.add_subcommand("rero", "Monte-Carlo ReRo matching success rate");
  DatasetFlags rr_ds;
  rr_ds.add(rero);
  int rr_candidates = 256;
  int rr_trials = 2000;
  double rr_clip = 1.0;
  std::vector<double> rr_sigmas{1e-3, 0.1, 1.0, 10.0, 1e3};
  rero->add_option("--candidates", rr_candidates)->capture_default_str();
  rero->add_option("--trials", rr_trials)->capture_default_str();
  rero->add_option("--clip", rr_clip)->capture_default_str();
  rero->add_option("--sigmas", rr_sigmas)->delimiter(',')->capture_default_str();

  // accountant
  auto* acc = app.add_subcommand("accountant", "Convert between mu and epsilon");
  std::optional<double> acc_mu, acc_eps;
  AccountantConfig acc_cfg;
  auto* mu_opt = acc->add_option("--mu", acc_mu);
  acc->add_option("--epsilon", acc_eps)->excludes(mu_opt);
  acc->add_option("--steps", acc_cfg.steps)->capture_default_str();
  acc->add_option("--p", acc_cfg.sampling_prob)->capture_default_str();
  acc->add_option("--delta", acc_cfg.delta)->capture_default_str();

  // serve
  auto* srv = app.add_subcommand("serve", "Run the audit HTTP service");
  std::string host = "127.0.0.1";
  int port = 8080;
  std::vector<std::string> prior_files;
  std::string srv_data = default_data_dir();
  srv->add_option("--host", host)->capture_default_str();
  srv->add_option("--port", port)->capture_default_str();
  srv->add_option("--prior-file", prior_files, "Extra GMM containers to serve");
  srv->add_option("--data-dir", srv_data)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto spec = gen_ds.spec(seed);
      const auto images = generate_dataset(spec, gen_count);
      ensure_parent(gen_out);
      save_container(gen_out, dataset_container(spec, images));
      if (!gen_png_dir.empty()) {
        fs::create_directories(gen_png_dir);
        for (std::size_t i = 0; i < images.size(); ++i) {
          char name[32];
          std::snprintf(name, sizeof(name), "%05zu.png", i);
          write_image(images[i], (fs::path(gen_png_dir) / name).string());
        }
      }
      std::printf("wrote %d images to %s\n", gen_count, gen_out.c_str());
    } else if (*fit) {
      GmmFit result;
      if (!fit_data.empty()) {
        const auto file = dataset_from_container(load_container(fit_data));
        result = fit_gmm(file.images, fit_k, derive_seed(RngSeed{seed}, 2));
      } else {
        EmOptions em;
        em.train_size = fit_train;
        result = fit_gmm_from_dataset(fit_ds.spec(seed), fit_k,
                                      derive_seed(RngSeed{seed}, 2), em);
      }
      ensure_parent(fit_out);
      save_container(fit_out, gmm_container(result.prior));
      std::printf("EM iterations %zu, mean log-likelihood %.6f\nwrote %s\n",
                  result.log_likelihood.size(), result.log_likelihood.back(),
                  fit_out.c_str());
    } else if (*train) {
      toy.seed = derive_seed(RngSeed{seed}, 9);
      const auto model = train_toy_denoiser(train_ds.spec(seed), default_schedule(), toy);
      ensure_parent(train_out);
      save_container(train_out, denoiser_container(model));
      std::printf("final loss %.6f\nwrote %s\n", model.loss_history.back(),
                  train_out.c_str());
    } else if (*attack) {
      const auto sched = default_schedule();
      std::shared_ptr<const NoisePredictor> predictor;
      ImageShape shape = att_ds.spec(seed).shape;
      if (!att_denoiser.empty()) {
        auto model = denoiser_from_container(load_container(att_denoiser));
        shape = model.shape();
        predictor = std::make_shared<ToyDenoiser>(std::move(model));
      } else {
        GmmPrior prior;
        if (!att_prior.empty()) {
          prior = gmm_from_container(load_container(att_prior));
        } else {
          prior = fit_gmm_from_dataset(att_ds.spec(seed), att_components,
                                       derive_seed(RngSeed{seed}, 2)).prior;
        }
        shape = prior.shape;
        predictor = std::make_shared<GmmPredictor>(prior, sched);
      }
      ImageTensor target;
      if (!att_image.empty()) {
        target = read_image(att_image);
      } else {
        auto spec = att_ds.spec(derive_seed(RngSeed{seed}, 3).value);
        spec.shape = shape;
        target = generate_dataset(spec, att_index + 1).back();
      }
      if (target.shape() != shape)
        throw DimensionError("target " + target.shape().to_string() +
                             " does not match prior " + shape.to_string());
      if (!att_sigma && !att_mu) throw ArgumentError("give --sigma or --mu");
      const PrivacyParams params = att_mu ? PrivacyParams::from_mu(*att_mu, att_clip)
                                          : PrivacyParams{att_clip, *att_sigma};
      const auto obs = privatize(target, params, derive_seed(RngSeed{seed}, 1));

      ReconstructOptions opts;
      json summary;
      if (att_lambda_unknown) {
        LambdaSearchOptions lo;
        lo.reconstruct = false;
        const auto search = approximate_lambda(obs, sched, *predictor, lo);
        if (!search.lambda_hat)
          throw MissingKnowledgeError("lambda search found no scorable candidate");
        opts.lambda = *search.lambda_hat;
        summary["lambda_hat"] = *search.lambda_hat;
      }
      ImageTensor rec;
      if (att_mode == "consensus") {
        auto cons = consensus_reconstruct(obs, sched, *predictor, att_k,
                                          derive_seed(RngSeed{seed}, 4), Metric::kMse,
                                          opts);
        rec = cons.consensus;
        summary["consistency_mse"] = cons.mean_pairwise.value;
      } else {
        const auto r = reconstruct(obs, sched, *predictor, parse_sampler(att_mode),
                                   derive_seed(RngSeed{seed}, 4), opts);
        rec = r.image;
        summary["t_start"] = r.t_start;
        summary["num_steps"] = r.num_steps;
      }
      const ImageTensor noisy = rescaled_observation(obs, opts.lambda);
      fs::create_directories(att_out);
      write_image(target, (fs::path(att_out) / "original.png").string());
      const bool lossy = write_image(noisy, (fs::path(att_out) / "noisy.png").string());
      write_image(rec, (fs::path(att_out) / "reconstruction.png").string());
      save_container((fs::path(att_out) / "noisy.prvc").string(),
                     latent_container(obs.x_priv));
      save_container((fs::path(att_out) / "reconstruction.prvc").string(),
                     latent_container(rec));
      summary["lambda_true"] = *obs.lambda;
      summary["noisy_png_lossy"] = lossy;
      summary["mse_reconstruction"] = mse(rec, target);
      summary["mse_noisy"] = mse(noisy, target);
      summary["out_dir"] = att_out;
      std::cout << summary.dump(2) << '\n';
    } else if (*sweep) {
      ExperimentConfig cfg;
      if (!sw_config.empty()) {
        std::ifstream in(sw_config);
        if (!in) throw FormatError("cannot open " + sw_config);
        cfg = config_from_json(json::parse(in));
      } else {
        cfg.dataset = sw_ds.spec(seed);
        if (sw_target) cfg.target_family = parse_family(*sw_target);
        cfg.prior_source = parse_prior_source(sw_source);
        cfg.prior_components = sw_components;
        cfg.mus = sw_mus;
        cfg.attack = parse_attack_mode(sw_attack);
        cfg.sampler = parse_sampler(sw_sampler);
        cfg.metrics.clear();
        for (const auto& m : sw_metrics) cfg.metrics.push_back(parse_metric(m));
        cfg.trials = sw_trials;
        cfg.consensus_k = sw_k;
        cfg.lambda_known = !sw_lambda_unknown;
        cfg.seed = seed;
        cfg.output_dir = sw_out;
      }
      const auto report = run_sweep(cfg);
      if (cfg.output_dir.empty()) write_report(report, sw_out);
      std::cout << report_csv(report);
    } else if (*rero) {
      auto spec = rr_ds.spec(derive_seed(RngSeed{seed}, 7).value);
      const auto candidates = generate_dataset(spec, rr_candidates);
      std::printf("sigma,mu,gamma,standard_error,trials\n");
      for (double s : rr_sigmas) {
        const PrivacyParams p{rr_clip, s};
        const auto g = estimate_rero_gamma(candidates, p, rr_trials,
                                           derive_seed(RngSeed{seed}, 8));
        std::printf("%g,%g,%.6f,%.6f,%d\n", s, p.mu(), g.gamma, g.standard_error,
                    g.trials);
      }
    } else if (*acc) {
      json out;
      if (acc_mu) {
        const auto r = mu_to_epsilon(*acc_mu, acc_cfg);
        out = {{"mu", *acc_mu}, {"epsilon", r.epsilon}, {"best_order", r.best_order}};
      } else if (acc_eps) {
        out = {{"epsilon", *acc_eps}, {"mu", epsilon_to_mu(*acc_eps, acc_cfg)}};
      } else {
        throw ArgumentError("give --mu or --epsilon");
      }
      out["T"] = acc_cfg.steps;
      out["p"] = acc_cfg.sampling_prob;
      out["delta"] = acc_cfg.delta;
      std::cout << out.dump(2) << '\n';
    } else if (*srv) {
      ServiceOptions opts;
      opts.seed = seed;
      opts.prior_files = prior_files;
      opts.data_dir = srv_data;
      serve(host, port, opts, &bound_message);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
