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

#include "privrecon/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "privrecon/baselines.hpp"
#include "privrecon/errors.hpp"
#include "privrecon/gradient_attacks.hpp"
#include "privrecon/parallel.hpp"

namespace privrecon {

namespace {

using nlohmann::json;

// Stream ids for derive_seed, so every random draw in a sweep hangs off the
// single configured seed.
enum Stream : std::uint64_t {
  kTrainData = 1,
  kPriorInit = 2,
  kTargets = 3,
  kReference = 4,
  kTrialNoise = 5,
  kSampler = 6,
  kReroPool = 7,
  kReroPick = 8,
  kToyTrain = 9,
  kBinning = 10,
};

RngSeed stream(std::uint64_t base, Stream s) {
  return derive_seed(RngSeed{base}, s);
}

std::string column(const std::string& prefix, Metric m) {
  return prefix + "_" + metric_name(m);
}

// Shortest text that reads back to the same double.
std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::string default_data_dir() {
  if (const char* env = std::getenv(kDataDirEnv); env != nullptr && *env != '\0')
    return env;
  return "privrecon-data";
}

const char* prior_source_name(PriorSource s) {
  switch (s) {
    case PriorSource::kGmmFit: return "gmm-fit";
    case PriorSource::kToyDenoiser: return "toy-denoiser";
    case PriorSource::kExactGmm: return "exact-gmm";
  }
  return "?";
}

PriorSource parse_prior_source(const std::string& s) {
  if (s == "gmm-fit") return PriorSource::kGmmFit;
  if (s == "toy-denoiser") return PriorSource::kToyDenoiser;
  if (s == "exact-gmm") return PriorSource::kExactGmm;
  throw ArgumentError("unknown prior source: " + s);
}

const char* attack_mode_name(AttackMode m) {
  switch (m) {
    case AttackMode::kSingle: return "single";
    case AttackMode::kBatchBinning: return "batch-binning";
    case AttackMode::kConsensus: return "consensus";
  }
  return "?";
}

AttackMode parse_attack_mode(const std::string& s) {
  if (s == "single") return AttackMode::kSingle;
  if (s == "batch-binning") return AttackMode::kBatchBinning;
  if (s == "consensus") return AttackMode::kConsensus;
  throw ArgumentError("unknown attack mode: " + s);
}

std::vector<PrivacyParams> ExperimentConfig::grid() const {
  std::vector<PrivacyParams> out;
  for (double mu : mus) out.push_back(PrivacyParams::from_mu(mu, clip_norm));
  out.insert(out.end(), clip_sigma.begin(), clip_sigma.end());
  return out;
}

void ExperimentConfig::validate() const {
  if (mus.empty() && clip_sigma.empty())
    throw ArgumentError("privacy grid is empty");
  if (trials < 1) throw ArgumentError("trials must be >= 1");
  if (metrics.empty()) throw ArgumentError("no metrics requested");
  validate_shape(dataset.shape);
  for (const auto& p : grid()) p.validate();
  if (prior_components < 1) throw ArgumentError("prior_components must be >= 1");
  if (train_size < prior_components)
    throw ArgumentError("train_size must be >= prior_components");
  if (attack == AttackMode::kConsensus && consensus_k < 2)
    throw ArgumentError("consensus needs k >= 2");
  if (attack == AttackMode::kBatchBinning && (batch_size < 1 || num_bins < 2))
    throw ArgumentError("batch-binning needs batch_size >= 1, num_bins >= 2");
  if (rero_candidates < 2) throw ArgumentError("rero_candidates must be >= 2");
  if (reference_size < 2) throw ArgumentError("reference_size must be >= 2");
  const SsimOptions ssim_opts;
  for (Metric m : metrics) {
    if (m == Metric::kSsim && (dataset.shape.height < ssim_opts.window ||
                               dataset.shape.width < ssim_opts.window))
      throw DimensionError("SSIM needs images of at least " +
                           std::to_string(ssim_opts.window) + " pixels a side");
  }
  accountant.validate();
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["dataset"] = {{"family", family_name(cfg.dataset.family)},
                  {"height", cfg.dataset.shape.height},
                  {"width", cfg.dataset.shape.width},
                  {"channels", cfg.dataset.shape.channels},
                  {"pixel_noise", cfg.dataset.pixel_noise}};
  j["target_family"] = cfg.target_family ? json(family_name(*cfg.target_family))
                                         : json(nullptr);
  j["prior_source"] = prior_source_name(cfg.prior_source);
  j["prior_components"] = cfg.prior_components;
  j["train_size"] = cfg.train_size;
  j["toy"] = {{"hidden", cfg.toy.hidden},
              {"steps", cfg.toy.steps},
              {"batch_size", cfg.toy.batch_size},
              {"learning_rate", cfg.toy.learning_rate}};
  j["clip_norm"] = cfg.clip_norm;
  j["mus"] = cfg.mus;
  json pairs = json::array();
  for (const auto& p : cfg.clip_sigma)
    pairs.push_back({{"C", p.clip_norm}, {"sigma", p.noise_multiplier}});
  j["clip_sigma"] = pairs;
  j["attack"] = attack_mode_name(cfg.attack);
  j["sampler"] = sampler_name(cfg.sampler);
  j["consensus_k"] = cfg.consensus_k;
  j["batch_size"] = cfg.batch_size;
  j["num_bins"] = cfg.num_bins;
  j["decoy_norm"] = cfg.decoy_norm;
  j["lambda_known"] = cfg.lambda_known;
  j["rero_candidates"] = cfg.rero_candidates;
  j["reference_size"] = cfg.reference_size;
  json metrics = json::array();
  for (Metric m : cfg.metrics) metrics.push_back(metric_name(m));
  j["metrics"] = metrics;
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["accountant"] = {{"steps", cfg.accountant.steps},
                     {"sampling_prob", cfg.accountant.sampling_prob},
                     {"delta", cfg.accountant.delta}};
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("experiment config must be an object");
  ExperimentConfig cfg;
  try {
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      cfg.dataset.family = parse_family(d.value("family", "blobs-a"));
      cfg.dataset.shape.height = d.value("height", cfg.dataset.shape.height);
      cfg.dataset.shape.width = d.value("width", cfg.dataset.shape.width);
      cfg.dataset.shape.channels = d.value("channels", cfg.dataset.shape.channels);
      cfg.dataset.pixel_noise = d.value("pixel_noise", cfg.dataset.pixel_noise);
    }
    if (j.contains("target_family") && !j.at("target_family").is_null())
      cfg.target_family = parse_family(j.at("target_family").get<std::string>());
    cfg.prior_source = parse_prior_source(
        j.value("prior_source", std::string(prior_source_name(cfg.prior_source))));
    cfg.prior_components = j.value("prior_components", cfg.prior_components);
    cfg.train_size = j.value("train_size", cfg.train_size);
    if (j.contains("toy")) {
      const auto& t = j.at("toy");
      cfg.toy.hidden = t.value("hidden", cfg.toy.hidden);
      cfg.toy.steps = t.value("steps", cfg.toy.steps);
      cfg.toy.batch_size = t.value("batch_size", cfg.toy.batch_size);
      cfg.toy.learning_rate = t.value("learning_rate", cfg.toy.learning_rate);
    }
    cfg.clip_norm = j.value("clip_norm", cfg.clip_norm);
    cfg.mus = j.value("mus", cfg.mus);
    if (j.contains("clip_sigma")) {
      for (const auto& p : j.at("clip_sigma"))
        cfg.clip_sigma.push_back({p.at("C").get<double>(), p.at("sigma").get<double>()});
    }
    cfg.attack = parse_attack_mode(
        j.value("attack", std::string(attack_mode_name(cfg.attack))));
    cfg.sampler = parse_sampler(
        j.value("sampler", std::string(sampler_name(cfg.sampler))));
    cfg.consensus_k = j.value("consensus_k", cfg.consensus_k);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.num_bins = j.value("num_bins", cfg.num_bins);
    cfg.decoy_norm = j.value("decoy_norm", cfg.decoy_norm);
    cfg.lambda_known = j.value("lambda_known", cfg.lambda_known);
    cfg.rero_candidates = j.value("rero_candidates", cfg.rero_candidates);
    cfg.reference_size = j.value("reference_size", cfg.reference_size);
    if (j.contains("metrics")) {
      cfg.metrics.clear();
      for (const auto& m : j.at("metrics"))
        cfg.metrics.push_back(parse_metric(m.get<std::string>()));
    }
    cfg.trials = j.value("trials", cfg.trials);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    if (j.contains("accountant")) {
      const auto& a = j.at("accountant");
      cfg.accountant.steps = a.value("steps", cfg.accountant.steps);
      cfg.accountant.sampling_prob =
          a.value("sampling_prob", cfg.accountant.sampling_prob);
      cfg.accountant.delta = a.value("delta", cfg.accountant.delta);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad experiment config: ") + e.what());
  }
  return cfg;
}

PreparedPrior prepare_prior(const ExperimentConfig& cfg) {
  PreparedPrior out;
  DatasetSpec train_spec = cfg.dataset;
  train_spec.seed = stream(cfg.seed, kTrainData).value;
  const auto train = generate_dataset(train_spec, cfg.train_size);
  double norm_sum = 0.0;
  for (const auto& x : train) norm_sum += x.norm();
  out.mean_train_norm = norm_sum / static_cast<double>(train.size());

  if (cfg.prior_source == PriorSource::kToyDenoiser) {
    ToyTrainConfig tc = cfg.toy;
    tc.seed = stream(cfg.seed, kToyTrain);
    out.predictor = std::make_shared<ToyDenoiser>(
        train_toy_denoiser(train, out.schedule, tc));
    return out;
  }
  auto fit = fit_gmm(train, cfg.prior_components, stream(cfg.seed, kPriorInit));
  out.gmm = fit.prior;
  out.predictor = std::make_shared<GmmPredictor>(fit.prior, out.schedule);
  return out;
}

std::vector<ImageTensor> draw_targets(const ExperimentConfig& cfg,
                                      const PreparedPrior& prior, int n,
                                      RngSeed seed) {
  if (cfg.prior_source == PriorSource::kExactGmm && !cfg.target_family) {
    if (!prior.gmm) throw MissingKnowledgeError("exact-gmm targets need a GMM");
    auto out = gmm_sample(*prior.gmm, n, seed);
    for (auto& x : out) x = x.clipped();
    return out;
  }
  DatasetSpec spec = cfg.dataset;
  if (cfg.target_family) spec.family = *cfg.target_family;
  spec.seed = seed.value;
  return generate_dataset(spec, n);
}

MetricStats summarize(const std::vector<double>& values) {
  MetricStats s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / s.count;
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / (s.count - 1));
  }
  return s;
}

MetricStats SweepRow::stats(const std::string& col) const {
  auto it = values.find(col);
  if (it == values.end()) return {};
  return summarize(it->second);
}

namespace {

using Columns = std::map<std::string, double>;

// Per-trial outcome of the single-image and consensus attacks.
Columns run_single_trial(const ExperimentConfig& cfg, const PreparedPrior& prior,
                         const ImageTensor& target, const Eigen::VectorXd& unit_noise,
                         const PrivacyParams& params, int trial) {
  Columns c;
  const auto obs = privatize_with_noise(target, params, unit_noise);
  const RngSeed sampler_seed = derive_seed(stream(cfg.seed, kSampler), trial);

  ReconstructOptions opts;
  if (!cfg.lambda_known) {
    LambdaSearchOptions lo;
    lo.reconstruct = false;
    lo.mode = cfg.sampler;
    lo.seed = sampler_seed;
    const auto search = approximate_lambda(obs, prior.schedule, *prior.predictor, lo);
    if (!search.lambda_hat)
      throw MissingKnowledgeError("lambda search found no scorable candidate");
    opts.lambda = *search.lambda_hat;
    c["lambda_rel_error"] = std::abs(*search.lambda_hat - *obs.lambda) / *obs.lambda;
  }

  ImageTensor rec;
  if (cfg.attack == AttackMode::kConsensus) {
    const Metric m = cfg.metrics.front();
    auto cons = consensus_reconstruct(obs, prior.schedule, *prior.predictor,
                                      cfg.consensus_k, sampler_seed, m, opts);
    rec = std::move(cons.consensus);
    c["consensus_" + std::string(metric_name(m))] = cons.mean_pairwise.value;
  } else {
    rec = reconstruct(obs, prior.schedule, *prior.predictor, cfg.sampler,
                      sampler_seed, opts).image;
  }

  // The noisy baseline is rescaled with the same lambda the attack used.
  const ImageTensor rescaled = rescaled_observation(obs, opts.lambda);
  const double noise = rescaled_noise_std(obs, opts.lambda);
  const ImageTensor wav = noise > 0.0 ? wavelet_denoise(rescaled, noise) : rescaled;
  for (Metric m : cfg.metrics) {
    c[column("attack", m)] = similarity(rec, target, m);
    c[column("noisy", m)] = similarity(rescaled, target, m);
    c[column("wavelet", m)] = similarity(wav, target, m);
  }
  return c;
}

Columns run_rero_trial(const ExperimentConfig& cfg, const ReRoConfig& base,
                       const Eigen::VectorXd& unit_noise, int trial) {
  Columns c;
  Rng pick(derive_seed(stream(cfg.seed, kReroPick), trial));
  ReRoConfig rc = base;
  rc.target_index = static_cast<int>(pick.below(base.candidates.size()));
  const auto& target = base.candidates[rc.target_index];
  const auto obs = privatize_with_noise(target, base.params, unit_noise);
  const auto outcome = rero_match(obs, rc);
  const auto& chosen = base.candidates[outcome.chosen_index];
  for (Metric m : cfg.metrics)
    c[column("rero", m)] = similarity(chosen, target, m);
  c["rero_success"] = outcome.correct ? 1.0 : 0.0;
  return c;
}

Columns run_binning_trial(const ExperimentConfig& cfg, const PreparedPrior& prior,
                          const ImprintLayerConfig& layer,
                          const std::vector<ImageTensor>& batch,
                          const PrivacyParams& params, int trial) {
  Columns c;
  const RngSeed seed = derive_seed(stream(cfg.seed, kBinning), trial);
  BatchAttackOptions bo;
  bo.mode = cfg.sampler;
  const auto occupancy = bin_occupancy(batch, layer);
  const auto attacked = attack_batch(batch, layer, params, seed, prior.schedule,
                                     *prior.predictor, bo);
  // Same gradients, no denoising: the noisy baseline.
  const auto grads =
      imprint_gradients(batch, layer, params, derive_seed(seed, 0));
  const auto raw = invert_bins(grads, layer, occupancy);

  // Sample owning each singly occupied bin.
  std::vector<int> owner(layer.num_bins, -1);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const int b = bin_of(layer.measurement.dot(batch[i].data()), layer);
    if (b >= 0 && occupancy[b] == 1) owner[b] = static_cast<int>(i);
  }

  std::map<std::string, std::vector<double>> acc;
  int recovered = 0;
  for (int b = 0; b < layer.num_bins; ++b) {
    if (attacked[b].status != BinStatus::kRecovered || owner[b] < 0) continue;
    ++recovered;
    const auto& truth = batch[owner[b]];
    const auto& noisy = *raw[b].image;
    const double s = estimate_noise_sigma(noisy).sigma_hat;
    const ImageTensor wav = s > 0.0 ? wavelet_denoise(noisy, s) : noisy;
    for (Metric m : cfg.metrics) {
      acc[column("attack", m)].push_back(similarity(*attacked[b].image, truth, m));
      acc[column("noisy", m)].push_back(similarity(noisy, truth, m));
      acc[column("wavelet", m)].push_back(similarity(wav, truth, m));
    }
  }
  c["recovered_bins"] = recovered;
  for (const auto& [k, v] : acc) c[k] = summarize(v).mean;
  return c;
}

}  // namespace

SweepReport run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  SweepReport report;
  report.config = cfg;

  const PreparedPrior prior = prepare_prior(cfg);
  const ImageShape shape = cfg.dataset.shape;
  const bool binning = cfg.attack == AttackMode::kBatchBinning;
  const int per_trial = binning ? cfg.batch_size : 1;

  const auto targets = draw_targets(cfg, prior, cfg.trials * per_trial,
                                    stream(cfg.seed, kTargets));
  const auto reference = draw_targets(cfg, prior, cfg.reference_size,
                                      stream(cfg.seed, kReference));
  for (Metric m : cfg.metrics)
    report.reference[metric_name(m)] = pairwise_baseline(reference, m);

  // Common random numbers: trial i sees the same target and unit noise at
  // every grid point.
  std::vector<Eigen::VectorXd> unit_noise;
  unit_noise.reserve(cfg.trials);
  for (int i = 0; i < cfg.trials; ++i) {
    Rng rng(derive_seed(stream(cfg.seed, kTrialNoise), i));
    unit_noise.push_back(rng.normal_vector(shape.size()));
  }

  std::vector<ImageTensor> rero_pool;
  if (!binning)
    rero_pool = draw_targets(cfg, prior, cfg.rero_candidates,
                             stream(cfg.seed, kReroPool));

  std::optional<ImprintLayerConfig> layer;
  if (binning) layer = make_imprint_config(reference, cfg.num_bins, cfg.decoy_norm);

  for (const auto& params : cfg.grid()) {
    SweepRow row;
    row.params = params;
    try {
      if (params.noise_multiplier > 0.0) {
        row.mu = params.mu();
        try {
          row.epsilon = mu_to_epsilon(*row.mu, cfg.accountant).epsilon;
        } catch (const AccountantOverflowError&) {
          // Leave epsilon blank: the mechanism is too weak to account.
        }
      }
      std::vector<Columns> per(cfg.trials);
      if (binning) {
        parallel_for(cfg.trials, [&](int i) {
          std::vector<ImageTensor> batch(targets.begin() + i * per_trial,
                                         targets.begin() + (i + 1) * per_trial);
          per[i] = run_binning_trial(cfg, prior, *layer, batch, params, i);
        });
      } else {
        ReRoConfig rc{rero_pool, 0, params};
        parallel_for(cfg.trials, [&](int i) {
          per[i] = run_single_trial(cfg, prior, targets[i], unit_noise[i], params, i);
          for (auto& [k, v] : run_rero_trial(cfg, rc, unit_noise[i], i)) per[i][k] = v;
        });
      }
      for (const auto& cols : per)
        for (const auto& [k, v] : cols) row.values[k].push_back(v);
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
      row.values.clear();
    }
    report.rows.push_back(std::move(row));
  }

  if (!cfg.output_dir.empty()) write_report(report, cfg.output_dir);
  return report;
}

namespace {

std::vector<std::string> report_columns(const SweepReport& report) {
  std::vector<std::string> cols;
  for (const auto& row : report.rows)
    for (const auto& [k, v] : row.values)
      if (std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
  std::sort(cols.begin(), cols.end());
  return cols;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::string report_csv(const SweepReport& report) {
  const auto cols = report_columns(report);
  std::ostringstream os;
  os << "clip_norm,noise_multiplier,mu,epsilon,status";
  for (const auto& c : cols) os << ',' << c << "_mean," << c << "_std";
  for (const auto& [m, v] : report.reference) os << ",pairwise_" << m;
  os << ",error\n";
  for (const auto& row : report.rows) {
    os << format_double(row.params.clip_norm) << ','
       << format_double(row.params.noise_multiplier) << ','
       << (row.mu ? format_double(*row.mu) : "") << ','
       << (row.epsilon ? format_double(*row.epsilon) : "") << ','
       << (row.failed ? "failed" : "ok");
    for (const auto& c : cols) {
      auto it = row.values.find(c);
      if (it == row.values.end()) {
        os << ",,";
        continue;
      }
      const auto s = summarize(it->second);
      os << ',' << format_double(s.mean) << ',' << format_double(s.stddev);
    }
    for (const auto& [m, v] : report.reference) os << ',' << format_double(v);
    os << ',' << csv_escape(row.error) << '\n';
  }
  return os.str();
}

json report_manifest(const SweepReport& report) {
  json j;
  j["tool"] = "privrecon";
  j["version"] = PRIVRECON_VERSION;
  j["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                       std::to_string(EIGEN_MAJOR_VERSION) + "." +
                       std::to_string(EIGEN_MINOR_VERSION);
  j["config"] = config_to_json(report.config);
  j["seed"] = report.config.seed;
  j["reference"] = report.reference;
  j["rows"] = report.rows.size();
  j["failed_rows"] = std::count_if(report.rows.begin(), report.rows.end(),
                                   [](const SweepRow& r) { return r.failed; });
  j["files"] = {"sweep.csv", "manifest.json"};
  return j;
}

json report_to_json(const SweepReport& report) {
  json j = report_manifest(report);
  json rows = json::array();
  for (const auto& row : report.rows) {
    json r;
    r["clip_norm"] = row.params.clip_norm;
    r["noise_multiplier"] = row.params.noise_multiplier;
    r["mu"] = row.mu ? json(*row.mu) : json(nullptr);
    r["epsilon"] = row.epsilon ? json(*row.epsilon) : json(nullptr);
    r["status"] = row.failed ? "failed" : "ok";
    if (row.failed) r["error"] = row.error;
    json stats = json::object();
    for (const auto& [k, v] : row.values) {
      const auto s = summarize(v);
      stats[k] = {{"mean", s.mean}, {"std", s.stddev}, {"count", s.count}};
    }
    r["stats"] = stats;
    rows.push_back(r);
  }
  j["rows"] = rows;
  j["csv"] = report_csv(report);
  return j;
}

void write_report(const SweepReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "sweep.csv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + dir + "/sweep.csv");
    out << report_csv(report);
  }
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + dir + "/manifest.json");
  out << report_manifest(report).dump(2) << '\n';
}

}  // namespace privrecon
