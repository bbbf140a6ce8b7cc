// Copyright 2026 The actrain Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end. Every subcommand writes run_manifest.json next to
// its outputs: the resolved flags, the version and SHA-256 digests of inputs.

#include <spdlog/spdlog.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "actrain/eval.h"
#include "actrain/features.h"
#include "actrain/kmeans.h"
#include "actrain/model.h"
#include "actrain/objectives.h"
#include "actrain/synth.h"
#include "actrain/training.h"
#include "json.hpp"

#ifndef ACTRAIN_VERSION
#define ACTRAIN_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace actrain {
namespace {

// ---------------------------------------------------------------------------
// --config handling: `key=value` lines become `--key=value` flags unless the
// same flag is already on the command line.

std::string NormalizeKey(std::string key) {
  while (!key.empty() && key.front() == '-') key.erase(key.begin());
  for (auto& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> ExpandConfig(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string config_path;
  std::size_t sub_pos = 0;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (sub_pos == 0 && !args[i].empty() && args[i][0] != '-') sub_pos = i;
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (config_path.empty() || sub_pos == 0) return args;

  std::set<std::string> given;
  for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
    if (args[i].rfind("--", 0) == 0) given.insert(NormalizeKey(args[i].substr(0, args[i].find('='))));
  }
  std::ifstream in(config_path);
  if (!in) throw std::runtime_error("cannot open config file " + config_path);
  std::vector<std::string> extra;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = Trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(config_path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = NormalizeKey(Trim(line.substr(0, eq)));
    if (key == "config" || given.count(key)) continue;
    extra.push_back("--" + key + "=" + Trim(line.substr(eq + 1)));
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1, extra.begin(), extra.end());
  return args;
}

// ---------------------------------------------------------------------------
// Run manifest.

json ResolvedFlags(const CLI::App& sub) {
  json flags = json::object();
  std::istringstream in(sub.config_to_str(true, false));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos || line[0] == '[' || line[0] == '#') continue;
    std::string key = Trim(line.substr(0, eq));
    std::string value = Trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    flags[key] = value;
  }
  return flags;
}

struct RunManifest {
  json inputs = json::object();
  json outputs = json::array();
  json results = json::object();

  void Input(const fs::path& p) { inputs[p.string()] = FileSha256(p); }
  void Output(const fs::path& p) { outputs.push_back(p.string()); }

  void Write(const fs::path& path, const CLI::App& sub, std::uint64_t seed) const {
    json j;
    j["tool"] = "actrain";
    j["version"] = ACTRAIN_VERSION;
    j["command"] = sub.get_name();
    j["seed"] = seed;
    j["config"] = ResolvedFlags(sub);
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    if (!results.empty()) j["results"] = results;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
  }
};

// Reads a feature manifest and records every referenced file as an input.
FeatureDataset LoadFeatures(const fs::path& manifest_path, RunManifest& run) {
  run.Input(manifest_path);
  for (const auto& [id, rel] : ReadManifest(manifest_path)) {
    const fs::path p = manifest_path.parent_path() / rel;
    if (fs::exists(p)) run.Input(p);
  }
  return ArchiveRead(manifest_path);
}

std::string Fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// ---------------------------------------------------------------------------
// featurize

struct FeaturizeArgs {
  std::string wav_manifest, out_dir, stats, fit_stats;
  LogMelOptions mel;
};

int RunFeaturize(const FeaturizeArgs& a, const CLI::App& sub) {
  if (!a.stats.empty() && !a.fit_stats.empty()) {
    throw std::invalid_argument("featurize: --stats and --fit-stats are mutually exclusive");
  }
  RunManifest run;
  run.Input(a.wav_manifest);
  const fs::path base = fs::path(a.wav_manifest).parent_path();
  FeatureDataset data;
  int failures = 0;
  for (const auto& [id, rel] : ReadManifest(a.wav_manifest)) {
    try {
      const fs::path wav_path = base / rel;
      if (!fs::exists(wav_path)) throw std::runtime_error("missing file " + wav_path.string());
      run.Input(wav_path);
      const WavData wav = ReadWav(wav_path);
      FeatureSequence seq;
      seq.utterance_id = id;
      seq.frames = LogMel(wav.samples, wav.sample_rate, a.mel);
      seq.frame_hop_ms = a.mel.hop_ms;
      data.push_back(std::move(seq));
    } catch (const std::exception& e) {
      spdlog::error("featurize: utterance {}: {}", id, e.what());
      ++failures;
    }
  }
  if (!a.fit_stats.empty() && !data.empty()) {
    const NormStats stats = ComputeNormStats(data);
    WriteNormStats(a.fit_stats, stats);
    run.Output(a.fit_stats);
    for (auto& seq : data) seq = Normalize(seq, stats);
  } else if (!a.stats.empty()) {
    run.Input(a.stats);
    const NormStats stats = ReadNormStats(a.stats);
    for (auto& seq : data) seq = Normalize(seq, stats);
  }
  ArchiveWrite(data, a.out_dir);
  const fs::path manifest = fs::path(a.out_dir) / "manifest.tsv";
  run.Output(manifest);
  // Validate by reading the archive back.
  const FeatureDataset check = ArchiveRead(manifest);
  if (check.size() != data.size()) throw std::runtime_error("featurize: archive re-read mismatch");
  run.results["utterances"] = data.size();
  run.results["failures"] = failures;
  run.Write(fs::path(a.out_dir) / "run_manifest.json", sub, 0);
  spdlog::info("featurize: {} utterances written, {} failed", data.size(), failures);
  return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// kmeans

struct KmeansArgs {
  std::string features, out_dir;
  int clusters = 256;
  int iters = 10;
  std::size_t init_utterances = 3000;
  bool full_lloyd = false;
  std::uint64_t seed = 0;
};

int RunKmeans(const KmeansArgs& a, const CLI::App& sub) {
  RunManifest run;
  const FeatureDataset data = LoadFeatures(a.features, run);
  Rng rng(a.seed, 5);
  const std::vector<std::size_t> sample = SampleUtterances(data.size(), a.init_utterances, rng);
  const MatrixF pooled = PoolFrames(data, sample);
  if (pooled.rows() < a.clusters) {
    throw std::invalid_argument("kmeans: " + std::to_string(pooled.rows()) +
                                " frames available for " + std::to_string(a.clusters) +
                                " clusters");
  }
  const MatrixD init = KmeansPlusPlusInit(pooled, a.clusters, rng);
  KmeansResult result;
  if (a.full_lloyd) {
    std::vector<std::size_t> all(data.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    result = Lloyd(PoolFrames(data, all), init, a.iters);
  } else {
    result = Lloyd(pooled, init, a.iters);
  }
  fs::create_directories(a.out_dir);
  const fs::path out(a.out_dir);
  WriteFtr(out / "centroids.ftr", result.centroids.cast<float>());
  const auto targets = AssignTargets(data, result.centroids);
  Alignments aligned;
  for (std::size_t u = 0; u < data.size(); ++u) aligned[data[u].utterance_id] = targets[u];
  WriteAlignments(out / "targets.tsv", aligned);
  {
    std::ofstream csv(out / "objective.csv", std::ios::binary);
    csv << "iteration,objective\n";
    for (std::size_t i = 0; i < result.history.size(); ++i) {
      csv << i << ',' << Fixed(result.history[i]) << '\n';
    }
    if (!csv) throw std::runtime_error("kmeans: cannot write objective.csv");
  }
  for (const char* f : {"centroids.ftr", "targets.tsv", "objective.csv"}) run.Output(out / f);
  run.results["objective"] = result.objective;
  run.results["iterations"] = result.iterations;
  run.results["sampled_utterances"] = sample.size();
  run.Write(out / "run_manifest.json", sub, a.seed);
  spdlog::info("kmeans: objective {:.4f} after {} iterations", result.objective, result.iterations);
  return 0;
}

// ---------------------------------------------------------------------------
// pretrain

struct PretrainArgs {
  std::string variant = "cotrain-exact";
  std::string features, targets, centroids, out_dir, resume;
  std::string codebook_init = "spread";
  int codebook_size = 256;
  int shift = 5;
  int hidden = 512;
  int layers = 3;
  int codeword_dim = 0;  // 0 = frame dim (co-training) or 512 (VQ-APC)
  double lr = 1e-3;
  int batch = 16;
  int epochs = 30;
  std::uint64_t seed = 0;
  double tau_start = 2.0, tau_end = 0.5, tau_decay = 0.99995;
  bool no_straight_through = false;
  double clip_norm = 0.0;
  int threads = 1;
};

int RunPretrain(const PretrainArgs& a, const CLI::App& sub) {
  RunManifest run;
  const FeatureDataset data = LoadFeatures(a.features, run);
  if (data.empty()) throw std::invalid_argument("pretrain: empty feature archive");
  TrainConfig config;
  config.variant = ParseVariant(a.variant);
  config.model.codebook_size = a.codebook_size;
  config.model.shift = a.shift;
  config.model.frame_dim = static_cast<int>(data.front().frames.cols());
  config.model.hidden_dim = a.hidden;
  config.model.num_layers = a.layers;
  config.model.codeword_dim =
      a.codeword_dim > 0 ? a.codeword_dim
                         : (config.variant == Variant::kVqApc ? 512 : config.model.frame_dim);
  config.model.codebook_init = ParseCodebookInit(a.codebook_init);
  config.lr = a.lr;
  config.batch_size = a.batch;
  config.epochs = a.epochs;
  config.seed = a.seed;
  config.tau_start = a.tau_start;
  config.tau_end = a.tau_end;
  config.tau_decay = a.tau_decay;
  config.straight_through = !a.no_straight_through;
  config.clip_norm = a.clip_norm;
  config.threads = a.threads;
  config.Validate();

  std::optional<HubertInputs> hubert;
  if (config.variant == Variant::kHubertLike) {
    if (a.targets.empty() || a.centroids.empty()) {
      throw std::invalid_argument("pretrain: hubert-like needs --targets and --centroids");
    }
    run.Input(a.targets);
    run.Input(a.centroids);
    hubert.emplace();
    hubert->centroids = ReadFtr(a.centroids).cast<double>();
    hubert->targets = AlignLabels(data, ReadAlignments(a.targets), config.model.codebook_size);
  }
  std::optional<Checkpoint> resume;
  if (!a.resume.empty()) {
    run.Input(a.resume);
    resume = LoadCheckpoint(a.resume);
  }

  const fs::path out(a.out_dir);
  fs::create_directories(out / "checkpoints");
  const fs::path loss_log = out / "loss.csv";
  TrainHooks hooks;
  hooks.diagnostic_path = out / "diagnostic.act";
  hooks.on_epoch = [&](const Checkpoint& ck) {
    char name[32];
    std::snprintf(name, sizeof(name), "epoch-%03llu.act", static_cast<unsigned long long>(ck.epoch));
    const fs::path path = out / "checkpoints" / name;
    SaveCheckpoint(path, ck);
    // Validate: a reload must serialize to the same bytes.
    if (SerializeCheckpoint(LoadCheckpoint(path)) != SerializeCheckpoint(ck)) {
      throw std::runtime_error("pretrain: checkpoint round-trip mismatch for " + path.string());
    }
    run.Output(path);
    WriteLossLog(loss_log, config.variant, ck.history);
  };
  const Checkpoint final_ck = Train(config, data, hubert ? &*hubert : nullptr, resume, hooks);
  run.Output(loss_log);
  run.results["final_objective"] = final_ck.history.back().objective;
  run.results["epochs"] = final_ck.epoch;
  run.results["steps"] = final_ck.step;
  run.results["params_sha256"] = ParamsDigest(final_ck.params);
  run.Write(out / "run_manifest.json", sub, a.seed);
  return 0;
}

// ---------------------------------------------------------------------------
// probe

struct ProbeArgs {
  std::string checkpoint, train_features, train_alignments, eval_features, eval_alignments;
  std::string phones, out_dir;
  std::vector<int> layers;
  double lr = 1e-3;
  int epochs = 10;
  int batch = 16;
  std::uint64_t seed = 0;
};

int RunProbe(const ProbeArgs& a, const CLI::App& sub) {
  RunManifest run;
  run.Input(a.checkpoint);
  run.Input(a.phones);
  run.Input(a.train_alignments);
  run.Input(a.eval_alignments);
  const Checkpoint ck = LoadCheckpoint(a.checkpoint);
  const std::vector<std::string> phones = ReadPhoneInventory(a.phones);
  const int P = static_cast<int>(phones.size());
  const FeatureDataset train = LoadFeatures(a.train_features, run);
  const FeatureDataset eval = LoadFeatures(a.eval_features, run);
  const Labels train_labels = AlignLabels(train, ReadAlignments(a.train_alignments), P);
  const Labels eval_labels = AlignLabels(eval, ReadAlignments(a.eval_alignments), P);
  std::vector<int> layers = a.layers;
  if (layers.empty()) {
    for (int l = 1; l <= ck.params.num_layers(); ++l) layers.push_back(l);
  }
  ProbeConfig pc;
  pc.lr = a.lr;
  pc.epochs = a.epochs;
  pc.batch_size = a.batch;
  pc.seed = a.seed;
  const std::string before = ParamsDigest(ck.params);
  const fs::path out(a.out_dir);
  fs::create_directories(out);
  std::vector<ProbeResult> results;
  for (const int layer : layers) {
    results.push_back(ProbeTrain(ck.params, layer, train, train_labels, eval, eval_labels, P, pc));
    const fs::path conf = out / ("confusion-layer" + std::to_string(layer) + ".csv");
    WriteConfusionCsv(conf, results.back().confusion, phones);
    run.Output(conf);
    std::cout << "layer " << layer << " per " << Fixed(results.back().per) << " frames "
              << results.back().frames << '\n';
  }
  if (ParamsDigest(ck.params) != before) throw std::logic_error("probe: backbone was modified");
  WriteProbeCsv(out / "probe.csv", results);
  run.Output(out / "probe.csv");
  run.results["params_sha256"] = before;
  run.Write(out / "run_manifest.json", sub, a.seed);
  return 0;
}

// ---------------------------------------------------------------------------
// codes

struct CodesArgs {
  std::string checkpoint, features, alignments, phones, out_dir;
  std::string source = "predictor";
};

int RunCodes(const CodesArgs& a, const CLI::App& sub) {
  RunManifest run;
  run.Input(a.checkpoint);
  run.Input(a.alignments);
  run.Input(a.phones);
  const Checkpoint ck = LoadCheckpoint(a.checkpoint);
  const std::vector<std::string> phones = ReadPhoneInventory(a.phones);
  const FeatureDataset data = LoadFeatures(a.features, run);
  const Labels labels =
      AlignLabels(data, ReadAlignments(a.alignments), static_cast<int>(phones.size()));
  const int shift = ck.config.model.shift;
  const CodeSource source = ParseCodeSource(a.source);
  const auto codes = ExtractCodes(ck.params, data, shift, source);
  const CodePhoneMatrix m = CountCodePhones(codes, labels, shift, static_cast<int>(phones.size()),
                                            static_cast<int>(ck.params.codebook.rows()));
  const fs::path out(a.out_dir);
  fs::create_directories(out);
  Alignments coded;
  for (std::size_t u = 0; u < data.size(); ++u) coded[data[u].utterance_id] = codes[u];
  WriteAlignments(out / "codes.tsv", coded);
  WriteCodePhoneCsv(out / "code_phone.csv", m, phones);
  run.Output(out / "codes.tsv");
  run.Output(out / "code_phone.csv");
  const double purity = Purity(m);
  run.results["purity"] = purity;
  run.results["frames"] = m.total;
  run.Write(out / "run_manifest.json", sub, 0);
  std::cout << "purity " << Fixed(purity) << " frames " << m.total << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckArgs {
  std::string variant = "all";
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
  GradCheckSetup setup;
  std::string out;
};

int RunGradcheck(const GradcheckArgs& a, const CLI::App& sub) {
  std::vector<Variant> variants;
  if (a.variant == "all") {
    variants = {Variant::kCotrainExact, Variant::kCotrainGumbel, Variant::kHubertLike,
                Variant::kVqApc, Variant::kApc};
  } else {
    variants = {ParseVariant(a.variant)};
  }
  bool ok = true;
  std::ostringstream csv;
  csv << "variant,block,max_rel_error,checked\n";
  RunManifest run;
  for (const Variant v : variants) {
    const GradCheckReport r = CheckLossGradients(v, a.setup, a.seed);
    for (const auto& b : r.blocks) {
      csv << VariantName(v) << ',' << b.name << ',' << b.max_rel_error << ',' << b.checked << '\n';
    }
    const bool pass = r.MaxRelError() < a.tolerance;
    ok = ok && pass;
    std::cout << VariantName(v) << " max_rel_error " << r.MaxRelError() << (pass ? " ok" : " FAIL")
              << '\n';
    for (const auto& name : r.FailingBlocks(a.tolerance)) std::cout << "  failing block " << name << '\n';
    run.results[std::string(VariantName(v))] = r.MaxRelError();
  }
  if (!a.out.empty()) {
    std::ofstream out(a.out, std::ios::binary);
    out << csv.str();
    if (!out) throw std::runtime_error("gradcheck: cannot write " + a.out);
    run.Output(a.out);
    run.Write(fs::path(a.out).replace_extension(".manifest.json"), sub, a.seed);
  }
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  SynthConfig config;
  std::string out_dir;
};

int RunSynth(const SynthArgs& a, const CLI::App& sub) {
  const SynthData data = Generate(a.config);
  WriteSynth(data, a.config, a.out_dir);
  RunManifest run;
  const fs::path out(a.out_dir);
  for (const char* f : {"manifest.tsv", "alignments.tsv", "phones.tsv", "centroids.ftr"}) {
    run.Output(out / f);
  }
  run.results["utterances"] = data.features.size();
  run.Write(out / "run_manifest.json", sub, a.config.seed);
  return 0;
}

// ---------------------------------------------------------------------------
// eval-loss

struct EvalLossArgs {
  std::string checkpoint, features, out;
  int batch = 16;
  int threads = 1;
};

int RunEvalLoss(const EvalLossArgs& a, const CLI::App& sub) {
  RunManifest run;
  run.Input(a.checkpoint);
  const Checkpoint ck = LoadCheckpoint(a.checkpoint);
  const FeatureDataset data = LoadFeatures(a.features, run);
  TrainConfig config = ck.config;
  config.batch_size = a.batch;
  config.threads = a.threads;
  const LossRecord r = EvaluateObjective(config, ck.params, data, nullptr);
  double mll = 0.0;
  std::size_t frames = 0;
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].frames.rows() > config.model.shift) usable.push_back(i);
  }
  for (std::size_t i = 0; i < usable.size(); i += static_cast<std::size_t>(a.batch)) {
    const std::span<const std::size_t> idx(
        usable.data() + i, std::min<std::size_t>(a.batch, usable.size() - i));
    const Batch<float> batch = MakeBatch<float>(data, idx);
    const std::size_t n = CountValidFrames(batch, config.model.shift);
    mll += MeanMarginalLogLikelihood<float>(batch, ck.params, config.model.shift) *
           static_cast<double>(n);
    frames += n;
  }
  mll /= static_cast<double>(frames);
  std::ostringstream line;
  line << VariantName(config.variant) << ',' << Fixed(r.objective) << ',' << Fixed(r.ce) << ','
       << Fixed(r.recon) << ',' << Fixed(r.entropy) << ',' << Fixed(mll) << ',' << frames;
  std::cout << "variant,objective,ce,recon,entropy,marginal_ll,frames\n" << line.str() << '\n';
  if (!a.out.empty()) {
    std::ofstream out(a.out, std::ios::binary);
    out << "variant,objective,ce,recon,entropy,marginal_ll,frames\n" << line.str() << '\n';
    if (!out) throw std::runtime_error("eval-loss: cannot write " + a.out);
    run.Output(a.out);
    run.results["objective"] = r.objective;
    run.results["marginal_ll"] = mll;
    run.Write(fs::path(a.out).replace_extension(".manifest.json"), sub, 0);
  }
  return 0;
}

}  // namespace
}  // namespace actrain

int main(int argc, char** argv) {
  using namespace actrain;
  CLI::App app{"Discrete-latent autoregressive co-training of speech representations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ACTRAIN_VERSION);
  std::string config_file;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_file,
                    "UTF-8 file of key=value lines; command-line flags take precedence");
  };

  FeaturizeArgs fa;
  auto* featurize = app.add_subcommand("featurize", "WAV files -> normalized log-Mel archive");
  featurize->add_option("--wav-manifest", fa.wav_manifest, "TSV of utt_id<TAB>wav path")
      ->required();
  featurize->add_option("--out-dir", fa.out_dir, "archive directory")->required();
  featurize->add_option("--stats", fa.stats, "apply saved normalization statistics");
  featurize->add_option("--fit-stats", fa.fit_stats,
                        "compute statistics on this set, apply and save them here");
  featurize->add_option("--window-ms", fa.mel.window_ms, "analysis window [typical: 25]")
      ->capture_default_str();
  featurize->add_option("--hop-ms", fa.mel.hop_ms, "frame hop [typical: 10]")->capture_default_str();
  featurize->add_option("--mels", fa.mel.num_mels, "Mel channels [typical: 40]")
      ->capture_default_str();
  add_config(featurize);

  KmeansArgs ka;
  auto* kmeans = app.add_subcommand("kmeans", "k-means++ and Lloyd over frames; hard targets");
  kmeans->add_option("--features", ka.features, "feature manifest")->required();
  kmeans->add_option("--out-dir", ka.out_dir, "output directory")->required();
  kmeans->add_option("--clusters", ka.clusters, "number of clusters N")->required();
  kmeans->add_option("--iters", ka.iters, "Lloyd iterations [typical: 10]")->capture_default_str();
  kmeans->add_option("--init-utterances", ka.init_utterances,
                     "utterances sampled for clustering [typical: 3000]")
      ->capture_default_str();
  kmeans->add_flag("--full-lloyd", ka.full_lloyd, "run Lloyd over the full dataset");
  kmeans->add_option("--seed", ka.seed, "random seed")->required();
  add_config(kmeans);

  PretrainArgs pa;
  auto* pretrain = app.add_subcommand("pretrain", "train a predictor with one of five objectives");
  pretrain->add_option("--variant", pa.variant,
                       "cotrain-exact | cotrain-gumbel | hubert-like | vq-apc | apc")
      ->required();
  pretrain->add_option("--features", pa.features, "feature manifest")->required();
  pretrain->add_option("--out-dir", pa.out_dir, "output directory")->required();
  pretrain->add_option("--codebook-size", pa.codebook_size, "N [typical: 100, 256 or 512]")
      ->capture_default_str();
  pretrain->add_option("--shift", pa.shift, "time shift k [typical: 5]")->capture_default_str();
  pretrain->add_option("--hidden", pa.hidden, "LSTM width [typical: 512]")->capture_default_str();
  pretrain->add_option("--layers", pa.layers, "LSTM layers [typical: 3]")->capture_default_str();
  pretrain->add_option("--codeword-dim", pa.codeword_dim,
                       "codeword size; 0 = frame dim, or 512 for vq-apc [typical: 512 for vq-apc]")
      ->capture_default_str();
  pretrain->add_option("--codebook-init", pa.codebook_init,
                       "uniform | spread frame sample for co-training codebooks")
      ->capture_default_str();
  pretrain->add_option("--lr", pa.lr, "Adam learning rate [typical: 1e-3]")->capture_default_str();
  pretrain->add_option("--batch", pa.batch, "utterances per batch [typical: 16]")
      ->capture_default_str();
  pretrain->add_option("--epochs", pa.epochs, "epochs [typical: 30]")->capture_default_str();
  pretrain->add_option("--seed", pa.seed, "random seed")->required();
  pretrain->add_option("--tau-start", pa.tau_start, "initial Gumbel temperature [typical: 2.0]")
      ->capture_default_str();
  pretrain->add_option("--tau-end", pa.tau_end, "final Gumbel temperature [typical: 0.5]")
      ->capture_default_str();
  pretrain->add_option("--tau-decay", pa.tau_decay, "per-step decay [typical: 0.99995]")
      ->capture_default_str();
  pretrain->add_flag("--no-straight-through", pa.no_straight_through,
                     "use the soft Gumbel sample in the forward pass");
  pretrain->add_option("--clip-norm", pa.clip_norm, "global gradient-norm clip; 0 = off")
      ->capture_default_str();
  pretrain->add_option("--targets", pa.targets, "k-means targets (hubert-like)");
  pretrain->add_option("--centroids", pa.centroids, "k-means centroids FTR1 (hubert-like)");
  pretrain->add_option("--resume", pa.resume, "continue from this checkpoint");
  pretrain->add_option("--threads", pa.threads, "worker threads; 1 is bit-exact deterministic")
      ->capture_default_str();
  add_config(pretrain);

  ProbeArgs pra;
  auto* probe = app.add_subcommand("probe", "linear phone probe on frozen hidden layers");
  probe->add_option("--checkpoint", pra.checkpoint, "model checkpoint")->required();
  probe->add_option("--layer", pra.layers, "1-based layer(s); default all");
  probe->add_option("--train-features", pra.train_features, "probe training manifest")
      ->required();
  probe->add_option("--train-alignments", pra.train_alignments, "frame labels for training")
      ->required();
  probe->add_option("--eval-features", pra.eval_features, "held-out manifest")->required();
  probe->add_option("--eval-alignments", pra.eval_alignments, "frame labels, held out")
      ->required();
  probe->add_option("--phones", pra.phones, "phone inventory TSV")->required();
  probe->add_option("--out-dir", pra.out_dir, "output directory")->required();
  probe->add_option("--lr", pra.lr, "Adam learning rate [typical: 1e-3]")->capture_default_str();
  probe->add_option("--epochs", pra.epochs, "probe epochs [typical: 10]")->capture_default_str();
  probe->add_option("--batch", pra.batch, "utterances per batch")->capture_default_str();
  probe->add_option("--seed", pra.seed, "random seed")->required();
  add_config(probe);

  CodesArgs ca;
  auto* codes = app.add_subcommand("codes", "code/phone conditional probabilities");
  codes->add_option("--checkpoint", ca.checkpoint, "model checkpoint")->required();
  codes->add_option("--features", ca.features, "feature manifest")->required();
  codes->add_option("--alignments", ca.alignments, "frame labels")->required();
  codes->add_option("--phones", ca.phones, "phone inventory TSV")->required();
  codes->add_option("--source", ca.source, "predictor | confirmer")->capture_default_str();
  codes->add_option("--out-dir", ca.out_dir, "output directory")->required();
  add_config(codes);

  GradcheckArgs ga;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of loss gradients");
  gradcheck->add_option("--variant", ga.variant, "a variant name or all")->capture_default_str();
  gradcheck->add_option("--seed", ga.seed, "random seed")->required();
  gradcheck->add_option("--tolerance", ga.tolerance, "max relative error")->capture_default_str();
  gradcheck->add_option("--dim", ga.setup.frame_dim, "frame dim")->capture_default_str();
  gradcheck->add_option("--codes", ga.setup.codebook_size, "codebook size")->capture_default_str();
  gradcheck->add_option("--hidden", ga.setup.hidden_dim, "LSTM width")->capture_default_str();
  gradcheck->add_option("--layers", ga.setup.num_layers, "LSTM layers")->capture_default_str();
  gradcheck->add_option("--length", ga.setup.length, "longest utterance")->capture_default_str();
  gradcheck->add_option("--shift", ga.setup.shift, "time shift")->capture_default_str();
  gradcheck->add_option("--batch", ga.setup.batch, "utterances")->capture_default_str();
  gradcheck->add_option("--eps", ga.setup.epsilon, "finite-difference step")
      ->capture_default_str();
  gradcheck->add_option("--out", ga.out, "per-block CSV report");
  add_config(gradcheck);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "synthetic hidden-Markov frames with known states");
  synth->add_option("--out-dir", sa.out_dir, "output directory")->required();
  synth->add_option("--states", sa.config.num_states, "M")->capture_default_str();
  synth->add_option("--dim", sa.config.dim, "frame dim d")->capture_default_str();
  synth->add_option("--self-transition", sa.config.self_transition, "gamma")
      ->capture_default_str();
  synth->add_option("--noise", sa.config.noise_std, "emission noise sigma")->capture_default_str();
  synth->add_option("--separation", sa.config.min_separation, "min centroid distance")
      ->capture_default_str();
  synth->add_option("--centroid-scale", sa.config.centroid_scale, "std of centroid draws")
      ->capture_default_str();
  synth->add_option("--min-length", sa.config.min_length, "frames")->capture_default_str();
  synth->add_option("--max-length", sa.config.max_length, "frames")->capture_default_str();
  synth->add_option("--utterances", sa.config.num_utterances, "count")->capture_default_str();
  synth->add_option("--seed", sa.config.seed, "random seed")->required();
  add_config(synth);

  EvalLossArgs ea;
  auto* eval_loss = app.add_subcommand("eval-loss", "objective and marginal log-likelihood");
  eval_loss->add_option("--checkpoint", ea.checkpoint, "model checkpoint")->required();
  eval_loss->add_option("--features", ea.features, "feature manifest")->required();
  eval_loss->add_option("--batch", ea.batch, "utterances per evaluation batch")
      ->capture_default_str();
  eval_loss->add_option("--threads", ea.threads, "worker threads")->capture_default_str();
  eval_loss->add_option("--out", ea.out, "CSV output");
  add_config(eval_loss);

  try {
    std::vector<std::string> args = ExpandConfig(argc, argv);
    std::reverse(args.begin(), args.end());
    args.pop_back();  // program name
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (featurize->parsed()) return RunFeaturize(fa, *featurize);
    if (kmeans->parsed()) return RunKmeans(ka, *kmeans);
    if (pretrain->parsed()) return RunPretrain(pa, *pretrain);
    if (probe->parsed()) return RunProbe(pra, *probe);
    if (codes->parsed()) return RunCodes(ca, *codes);
    if (gradcheck->parsed()) return RunGradcheck(ga, *gradcheck);
    if (synth->parsed()) return RunSynth(sa, *synth);
    if (eval_loss->parsed()) return RunEvalLoss(ea, *eval_loss);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 1;
}
