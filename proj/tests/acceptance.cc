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


// Acceptance run: one PASS/FAIL line per criterion. Options:
//   --report PATH     also write the lines (plus per-seed detail) to PATH
//   --allow-fail N    criterion N may fail without a non-zero exit (repeatable)
//   --seeds K         seeds for the synthetic-corpus criteria (default 5)

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "actrain/eval.h"
#include "actrain/features.h"
#include "actrain/kmeans.h"
#include "actrain/objectives.h"
#include "actrain/synth.h"
#include "actrain/training.h"
#include "test_util.h"

namespace actrain {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double Median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

const Variant kAllVariants[] = {Variant::kCotrainExact, Variant::kCotrainGumbel,
                                Variant::kHubertLike, Variant::kVqApc, Variant::kApc};

// Random tiny model plus one batch over its data.
struct Tiny {
  FeatureDataset data;
  LatentConfig config;
  ModelParams<double> params;
  Batch<double> batch;
};

Tiny MakeTiny(Rng& rng, Variant variant, int codes, int utterances, int shift) {
  Tiny t;
  t.data = testing::RandomDataset(rng, utterances, 3, shift + 1, 12);
  while (PoolFrames(t.data, testing::AllIndices(t.data.size())).rows() < codes) {
    t.data = testing::RandomDataset(rng, utterances + codes / 4, 3, shift + 1, 12);
  }
  t.config = testing::TinyConfig(3, codes, 6, 2, shift);
  if (variant == Variant::kVqApc) t.config.codeword_dim = 2;
  t.params = testing::TinyModel(t.config, variant, t.data, rng);
  if (variant != Variant::kApc) {
    for (Eigen::Index i = 0; i < t.params.codebook.size(); ++i) t.params.codebook.data()[i] = rng.Normal();
  }
  t.batch = MakeBatch<double>(t.data, testing::AllIndices(t.data.size()));
  return t;
}

// ---------------------------------------------------------------------------

Outcome GradientCorrectness() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0;
  std::string worst_name;
  for (const Variant v : kAllVariants) {
    const GradCheckReport r = CheckLossGradients(v, GradCheckSetup{}, 1);
    for (const auto& b : r.blocks) {
      if (b.max_rel_error >= worst) {
        worst = b.max_rel_error;
        worst_name = std::string(VariantName(v)) + "/" + b.name;
      }
    }
  }
  const double secs = Seconds(start);
  return {worst < 1e-4 && secs < 60,
          Fmt("max rel error %.2e (%s), %.1fs", worst, worst_name.c_str(), secs)};
}

Outcome ElboIdentity() {
  Rng rng(2);
  double worst_excess = -1e300, worst_gap = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int codes = 2 + static_cast<int>(rng.UniformInt(8));
    Tiny t = MakeTiny(rng, Variant::kCotrainExact, codes, 2, 1 + static_cast<int>(rng.UniformInt(3)));
    LossOptions<double> opt;
    opt.shift = t.config.shift;
    opt.sharpness = 0.2 + 2 * rng.Uniform();
    const double marginal = MeanMarginalLogLikelihood(t.batch, t.params, opt.shift);
    const double bound = CotrainExactLoss<double>(t.batch, t.params, opt, nullptr).per_frame_objective;
    opt.confirmation = ConfirmationMode::kPosterior;
    const double tight = CotrainExactLoss<double>(t.batch, t.params, opt, nullptr).per_frame_objective;
    worst_excess = std::max(worst_excess, bound - marginal);
    worst_gap = std::max(worst_gap, std::abs(tight - marginal));
  }
  return {worst_excess <= 0 && worst_gap < 1e-9,
          Fmt("max(bound - marginal) %.3e, max |posterior gap| %.2e", worst_excess, worst_gap)};
}

Outcome ExactMarginalization() {
  Rng rng(3);
  double worst = 0;
  for (const int codes : {1, 2, 4, 8, 16, 32, 64}) {
    Tiny t = MakeTiny(rng, Variant::kCotrainExact, codes, 3, 2);
    LossOptions<double> opt;
    opt.shift = 2;
    opt.sharpness = 0.7;
    const LossBreakdown got = CotrainExactLoss<double>(t.batch, t.params, opt, nullptr);
    double ce = 0, recon = 0, ent = 0, obj = 0;
    std::size_t frames = 0;
    const double d = 3;
    for (const auto& seq : t.data) {
      const MatrixD x = seq.frames.cast<double>();
      const MatrixD top = LstmForward<double>(t.params, x).hidden.back();
      for (Eigen::Index a = 0; a + 2 < x.rows(); ++a) {
        double zp = 0, zq = 0;
        std::vector<double> lp(codes), lq(codes), lg(codes);
        for (int z = 0; z < codes; ++z) {
          lp[z] = top.row(a).dot(t.params.code_projection.col(z));
          const double sq = (x.row(a + 2) - t.params.codebook.row(z)).squaredNorm();
          lq[z] = -0.7 * sq;
          lg[z] = -0.5 * d * std::log(2 * std::numbers::pi) - 0.5 * sq;
          zp += std::exp(lp[z]);
          zq += std::exp(lq[z]);
        }
        for (int z = 0; z < codes; ++z) {
          const double q = std::exp(lq[z]) / zq;
          const double log_p = lp[z] - std::log(zp), log_q = lq[z] - std::log(zq);
          ce -= q * log_p;
          recon -= q * lg[z];
          ent -= q * log_q;
          obj += q * (log_p + lg[z] - log_q);
        }
        ++frames;
      }
    }
    const double n = static_cast<double>(frames);
    for (const double diff : {got.ce_term - ce / n, got.recon_term - recon / n,
                              got.entropy_term - ent / n, got.per_frame_objective - obj / n}) {
      worst = std::max(worst, std::abs(diff));
    }
  }
  return {worst < 1e-10, Fmt("max termwise |diff| %.2e over N in {1..64}", worst)};
}

Outcome SpecialCases() {
  Rng rng(4);
  // (a) sharp confirmation.
  Tiny t = MakeTiny(rng, Variant::kCotrainExact, 6, 3, 2);
  LossOptions<double> opt;
  opt.shift = 2;
  opt.sharpness = 1e4;
  const LossBreakdown sharp = CotrainExactLoss<double>(t.batch, t.params, opt, nullptr);
  double point = 0;
  std::size_t frames = 0;
  for (const auto& seq : t.data) {
    const MatrixD x = seq.frames.cast<double>();
    const MatrixD top = LstmForward<double>(t.params, x).hidden.back();
    for (Eigen::Index a = 0; a + 2 < x.rows(); ++a) {
      const VectorD f = x.row(a + 2).transpose();
      const Eigen::Index z = ArgMin(CodewordSqDistances<double>(f, t.params.codebook));
      point += PredictorDistribution<double>(top.row(a).transpose(), t.params.code_projection).log_probs(z) +
               GenerationLogDensity<double>(f, z, t.params.codebook);
      ++frames;
    }
  }
  point /= static_cast<double>(frames);
  const double point_gap = std::abs(sharp.per_frame_objective - point);
  const bool a_ok = sharp.entropy_term < 1e-5 && point_gap < 1e-5;

  // (b) hubert CE against hard-q co-training CE with V = centroids.
  double b_gap = 0;
  for (int trial = 0; trial < 10; ++trial) {
    Tiny h = MakeTiny(rng, Variant::kHubertLike, 5, 3, 2);
    std::vector<std::vector<int>> targets;
    for (const auto& seq : h.data) {
      std::vector<int> tg(seq.frames.rows());
      for (Eigen::Index i = 0; i < seq.frames.rows(); ++i) {
        tg[i] = static_cast<int>(ArgMin(CodewordSqDistances<double>(
            VectorD(seq.frames.row(i).cast<double>().transpose()), h.params.codebook)));
      }
      targets.push_back(std::move(tg));
    }
    const Batch<double> batch = MakeBatch<double>(h.data, testing::AllIndices(h.data.size()), &targets);
    LossOptions<double> o;
    o.shift = 2;
    const double hub = HubertLikeLoss<double>(batch, h.params, o, nullptr).ce_term;
    o.confirmation = ConfirmationMode::kHard;
    b_gap = std::max(b_gap, std::abs(hub - CotrainExactLoss<double>(batch, h.params, o, nullptr).ce_term));
  }
  const bool b_ok = b_gap < 1e-12;

  // (c) zero noise, tiny temperature, soft forward pass.
  double c_gap = 0;
  for (int trial = 0; trial < 10; ++trial) {
    Tiny g = MakeTiny(rng, Variant::kCotrainGumbel, 6, 2, 2);
    const auto noise = ZeroGumbelNoise(g.batch, 6);
    LossOptions<double> o;
    o.shift = 2;
    o.gumbel_noise = &noise;
    o.gumbel.temperature = 1e-7;
    o.gumbel.straight_through = false;
    const double soft = CotrainGumbelLoss<double>(g.batch, g.params, o, nullptr).ce_term;
    LossOptions<double> hard;
    hard.shift = 2;
    hard.confirmation = ConfirmationMode::kHard;
    c_gap = std::max(c_gap, std::abs(soft - CotrainExactLoss<double>(g.batch, g.params, hard, nullptr).ce_term));

    Tiny v = MakeTiny(rng, Variant::kVqApc, 5, 2, 2);
    const auto vnoise = ZeroGumbelNoise(v.batch, 5);
    o.gumbel_noise = &vnoise;
    const double vq = VqApcLoss<double>(v.batch, v.params, o, nullptr).total;
    double want = 0;
    std::size_t n = 0;
    for (const auto& seq : v.data) {
      const MatrixD x = seq.frames.cast<double>();
      const MatrixD top = LstmForward<double>(v.params, x).hidden.back();
      for (Eigen::Index a = 0; a + 2 < x.rows(); ++a) {
        const Eigen::Index z = ArgMax(VectorD(v.params.code_projection.transpose() * top.row(a).transpose()));
        want -= GenerationLogDensity<double>(VectorD(x.row(a + 2).transpose()), z, v.params.codebook,
                                             &v.params.codeword_projection);
        ++n;
      }
    }
    c_gap = std::max(c_gap, std::abs(vq - want / static_cast<double>(n)));
  }
  const bool c_ok = c_gap < 1e-6;
  return {a_ok && b_ok && c_ok,
          Fmt("(a) H(q) %.1e, point-mass gap %.1e; (b) CE gap %.1e; (c) argmax gap %.1e",
              sharp.entropy_term, point_gap, b_gap, c_gap)};
}

Outcome Kmeans() {
  Rng rng(5);
  int increases = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 5 + static_cast<int>(rng.UniformInt(40));
    const int d = 1 + static_cast<int>(rng.UniformInt(4));
    const int k = 1 + static_cast<int>(rng.UniformInt(std::min(n, 6)));
    MatrixF frames(n, d);
    for (Eigen::Index i = 0; i < frames.size(); ++i) frames.data()[i] = static_cast<float>(rng.Normal());
    MatrixD init(k, d);
    for (int j = 0; j < k; ++j) init.row(j) = frames.row(rng.UniformInt(n)).cast<double>();
    const KmeansResult r = Lloyd(frames, init, 20);
    for (std::size_t i = 1; i < r.history.size(); ++i) increases += r.history[i] > r.history[i - 1] + 1e-9;
  }

  MatrixF four(4, 1);
  four << 0, 1, 10, 11;
  MatrixD init(2, 1);
  init << 0, 1;
  const KmeansResult r = Lloyd(four, init, 10);
  double lo = std::min(r.centroids(0, 0), r.centroids(1, 0));
  double hi = std::max(r.centroids(0, 0), r.centroids(1, 0));
  double brute = 1e300;
  for (int mask = 1; mask < 15; ++mask) {
    double s[2] = {0, 0}, c[2] = {0, 0};
    for (int i = 0; i < 4; ++i) {
      s[(mask >> i) & 1] += four(i, 0);
      ++c[(mask >> i) & 1];
    }
    double obj = 0;
    for (int i = 0; i < 4; ++i) obj += std::pow(four(i, 0) - s[(mask >> i) & 1] / c[(mask >> i) & 1], 2);
    brute = std::min(brute, obj);
  }
  const bool hand_ok = lo == 0.5 && hi == 10.5 && r.objective == 1.0 && brute == 1.0;

  MatrixF three(3, 1);
  three << 0, 1, 3;
  const double d2[3][3] = {{0, 1, 9}, {1, 0, 4}, {9, 4, 0}};
  std::map<std::pair<int, int>, int> counts;
  const int trials = 100000;
  auto index = [](double v) { return v == 0 ? 0 : v == 1 ? 1 : 2; };
  for (int trial = 0; trial < trials; ++trial) {
    Rng tr(static_cast<std::uint64_t>(trial), 5);
    const MatrixD c = KmeansPlusPlusInit(three, 2, tr);
    ++counts[{index(c(0, 0)), index(c(1, 0))}];
  }
  double worst = 0;
  for (int a = 0; a < 3; ++a) {
    const double total = d2[a][0] + d2[a][1] + d2[a][2];
    for (int b = 0; b < 3; ++b) {
      const double want = a == b ? 0 : d2[a][b] / total / 3;
      worst = std::max(worst, std::abs(counts[{a, b}] / double(trials) - want));
    }
  }
  return {increases == 0 && hand_ok && worst < 0.01,
          Fmt("%d increases over 1000 runs; centroids {%g, %g} objective %g (brute %g); "
              "D^2 law max |freq - p| %.4f",
              increases, lo, hi, r.objective, brute, worst)};
}

Outcome GumbelStatistics() {
  Rng rng(6);
  const std::vector<double> g = GumbelNoise(rng, 1000000);
  double mean = 0;
  for (const double x : g) mean += x;
  mean /= static_cast<double>(g.size());

  VectorD probs(4);
  probs << 0.1, 0.2, 0.3, 0.4;
  const VectorD logits = probs.array().log().matrix();
  std::vector<int> counts(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    VectorD noisy = logits;
    for (int j = 0; j < 4; ++j) noisy(j) += GumbelFromUniform(rng.UniformOpen());
    ++counts[ArgMax(Softmax(VectorD(noisy / 0.5)))];
  }
  double worst = 0;
  for (int j = 0; j < 4; ++j) worst = std::max(worst, std::abs(counts[j] / double(n) - probs(j)));
  return {std::abs(mean - 0.5772) <= 0.01 && worst < 0.01,
          Fmt("mean %.4f; one-hot L_inf %.4f", mean, worst)};
}

// ---------------------------------------------------------------------------
// Synthetic-corpus runs shared by criteria 7 to 9.

struct SeedRun {
  std::uint64_t seed = 0;
  double purity_exact = 0;
  std::map<Variant, double> final_objective;
  double probe_untrained = 0, probe_trained = 0;
  double train_seconds_exact = 0;
};

TrainConfig DeskConfig(Variant v, std::uint64_t seed) {
  TrainConfig c;
  c.variant = v;
  c.model.codebook_size = 8;
  c.model.frame_dim = 40;
  c.model.codeword_dim = 40;
  c.model.hidden_dim = 32;
  c.model.num_layers = 3;
  c.model.shift = 5;
  c.lr = 1e-2;
  c.batch_size = 16;
  c.epochs = 30;
  c.seed = seed;
  return c;
}

SeedRun RunSeed(std::uint64_t seed, std::ostream& log) {
  SeedRun out;
  out.seed = seed;
  SynthConfig sc;
  sc.seed = seed;
  sc.num_utterances = 240;
  const SynthData sd = Generate(sc);
  const FeatureDataset train(sd.features.begin(), sd.features.begin() + 200);
  const FeatureDataset held(sd.features.begin() + 200, sd.features.end());
  const Labels train_labels = AlignLabels(train, sd.states, 8);
  const Labels held_labels = AlignLabels(held, sd.states, 8);

  Rng krng(seed, 5);
  const MatrixF pooled = PoolFrames(train, testing::AllIndices(train.size()));
  const KmeansResult km = Lloyd(pooled, KmeansPlusPlusInit(pooled, 8, krng), 10);
  const HubertInputs hubert{km.centroids, AssignTargets(train, km.centroids)};

  for (const Variant v : {Variant::kCotrainExact, Variant::kCotrainGumbel, Variant::kHubertLike}) {
    const auto start = std::chrono::steady_clock::now();
    ModelParams<float> initial;
    TrainHooks hooks;
    hooks.on_epoch = [&](const Checkpoint& ck) {
      if (ck.epoch == 0) initial = ck.params;
    };
    const Checkpoint ck = Train(DeskConfig(v, seed), train, &hubert, {}, hooks);
    const double secs = Seconds(start);
    out.final_objective[v] = ck.history.back().objective;
    const double purity = Purity(ComputeCodePhoneMatrix(ck.params, train, train_labels, 5, 8,
                                                        CodeSource::kConfirmer));
    log << Fmt("  seed %llu %-14s objective %.4f -> %.4f, confirmer purity %.4f (%.0fs)\n",
               static_cast<unsigned long long>(seed), std::string(VariantName(v)).c_str(),
               ck.history.front().objective, ck.history.back().objective, purity, secs);
    if (v == Variant::kCotrainExact) {
      out.purity_exact = purity;
      out.train_seconds_exact = secs;
      ProbeConfig pc;
      pc.seed = seed;
      out.probe_untrained = ProbeTrain(initial, 2, train, train_labels, held, held_labels, 8, pc).per;
      out.probe_trained = ProbeTrain(ck.params, 2, train, train_labels, held, held_labels, 8, pc).per;
      log << Fmt("  seed %llu layer-2 probe error: untrained %.4f, trained %.4f\n",
                 static_cast<unsigned long long>(seed), out.probe_untrained, out.probe_trained);
    }
    log.flush();
  }
  return out;
}

Outcome SyntheticRecovery(const std::vector<SeedRun>& runs) {
  std::vector<double> purity, secs;
  for (const auto& r : runs) {
    purity.push_back(r.purity_exact);
    secs.push_back(r.train_seconds_exact);
  }
  const double m = Median(purity);
  const double slowest = secs.empty() ? 0 : *std::max_element(secs.begin(), secs.end());
  const double worst = purity.empty() ? 0 : *std::min_element(purity.begin(), purity.end());
  return {m >= 0.90 && slowest < 900,
          Fmt("median confirmer purity %.4f over %zu seeds (min %.4f); slowest run %.0fs", m,
              runs.size(), worst, slowest)};
}

Outcome OptimizationOrdering(const std::vector<SeedRun>& runs) {
  std::vector<double> eg, gh, eh;
  for (const auto& r : runs) {
    const double e = r.final_objective.at(Variant::kCotrainExact);
    const double g = r.final_objective.at(Variant::kCotrainGumbel);
    const double h = r.final_objective.at(Variant::kHubertLike);
    eg.push_back(e - g);
    gh.push_back(g - h);
    eh.push_back(e - h);
  }
  const double meg = Median(eg), mgh = Median(gh), meh = Median(eh);
  return {meg >= 0 && mgh >= 0 && meh >= 0.1,
          Fmt("median exact-gumbel %+.4f, gumbel-hubert %+.4f, exact-hubert %+.4f nat/frame "
              "(need >= 0, >= 0, >= 0.1)",
              meg, mgh, meh)};
}

Outcome ProbeSanity(const std::vector<SeedRun>& runs) {
  std::vector<double> rel;
  for (const auto& r : runs) rel.push_back((r.probe_untrained - r.probe_trained) / r.probe_untrained);
  const double m = Median(rel);
  return {m >= 0.20, Fmt("median relative error reduction %.1f%% (need >= 20%%)", 100 * m)};
}

// ---------------------------------------------------------------------------

Outcome DeterminismAndFormats() {
  SynthConfig sc;
  sc.num_states = 3;
  sc.dim = 4;
  sc.min_length = 12;
  sc.max_length = 20;
  sc.num_utterances = 12;
  sc.min_separation = 2;
  sc.centroid_scale = 2;
  sc.seed = 10;
  const SynthData sd = Generate(sc);
  std::vector<std::string> failures;

  int resume_ok = 0;
  for (const Variant v : kAllVariants) {
    TrainConfig c;
    c.variant = v;
    c.model = testing::TinyConfig(4, 3, 8, 2, 2);
    if (v == Variant::kVqApc) c.model.codeword_dim = 3;
    c.lr = 1e-2;
    c.batch_size = 4;
    c.epochs = 4;
    c.seed = 11;
    Rng krng(1, 5);
    const MatrixF pooled = PoolFrames(sd.features, testing::AllIndices(sd.features.size()));
    const MatrixD cent = Lloyd(pooled, KmeansPlusPlusInit(pooled, 3, krng), 10).centroids;
    const HubertInputs hub{cent, AssignTargets(sd.features, cent)};
    const Checkpoint straight = Train(c, sd.features, &hub);
    TrainConfig half = c;
    half.epochs = 2;
    const std::string bytes = SerializeCheckpoint(Train(half, sd.features, &hub));
    const Checkpoint reloaded = DeserializeCheckpoint(bytes);
    if (SerializeCheckpoint(reloaded) != bytes) failures.push_back("checkpoint bytes");
    const Checkpoint resumed = Train(c, sd.features, &hub, reloaded);
    if (SerializeCheckpoint(resumed) == SerializeCheckpoint(straight)) {
      ++resume_ok;
    } else {
      failures.push_back("resume " + std::string(VariantName(v)));
    }
  }

  testing::ScratchDir dir("acceptance");
  Rng rng(12);
  MatrixF m(17, 9);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.Normal());
  WriteFtr(dir / "m.ftr", m);
  const MatrixF back = ReadFtr(dir / "m.ftr");
  const bool ftr_ok = back.rows() == 17 && back.cols() == 9 &&
                      std::memcmp(back.data(), m.data(), sizeof(float) * m.size()) == 0;
  if (!ftr_ok) failures.push_back("FTR1");

  FeatureDataset data = testing::RandomDataset(rng, 30, 8, 20, 80);
  for (auto& seq : data) seq.frames = (seq.frames.array() * 7.0f + 3.0f).matrix();
  const NormStats stats = ComputeNormStats(data);
  FeatureDataset normalized;
  for (const auto& seq : data) normalized.push_back(Normalize(seq, stats));
  const NormStats check = ComputeNormStats(normalized);
  const double mean_err = check.mean.cwiseAbs().maxCoeff();
  const double std_err = (check.std.array() - 1.0).abs().maxCoeff();
  if (!(mean_err < 1e-5 && std_err < 1e-4)) failures.push_back("normalization");

  std::string detail = Fmt("resume bit-exact %d/5 variants; FTR1 %s; |mean| %.1e, |std-1| %.1e",
                           resume_ok, ftr_ok ? "bit-exact" : "MISMATCH", mean_err, std_err);
  for (const auto& f : failures) detail += "; failed: " + f;
  return {failures.empty(), detail};
}

Outcome FeaturePipeline() {
  Rng rng(13);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int window = 1 + static_cast<int>(rng.UniformInt(800));
    const int hop = 1 + static_cast<int>(rng.UniformInt(400));
    const std::size_t n = rng.UniformInt(20000);
    int count = 0;
    for (std::size_t s = 0; s + window <= n; s += hop) ++count;
    mismatches += NumFrames(n, window, hop) != count;
  }

  const int sr = 16000, mels = 40;
  std::vector<double> sine(sr);
  for (int i = 0; i < sr; ++i) sine[i] = 0.5 * std::sin(2 * std::numbers::pi * 1000.0 * i / sr);
  auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  auto hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  int predicted = -1;
  double best = -1;
  for (int m = 0; m < mels; ++m) {
    const double lo = hz(mel(sr / 2.0) * m / (mels + 1));
    const double c = hz(mel(sr / 2.0) * (m + 1) / (mels + 1));
    const double hi = hz(mel(sr / 2.0) * (m + 2) / (mels + 1));
    const double w = 1000.0 <= c ? (1000.0 - lo) / (c - lo) : (hi - 1000.0) / (hi - c);
    if (1000.0 > lo && 1000.0 < hi && w > best) {
      best = w;
      predicted = m;
    }
  }
  const MatrixF feats = LogMel(sine, sr);
  const auto peak = ArgMax(VectorD(feats.cast<double>().colwise().mean().transpose()));

  const MatrixF zero = LogMel(std::vector<double>(8000, 0.0), sr);
  const float floor_value = static_cast<float>(std::log(1e-10));
  const bool floor_ok = (zero.array() == floor_value).all();
  return {mismatches == 0 && peak == predicted && floor_ok,
          Fmt("%d/1000 frame-count mismatches; 1 kHz peak at bin %ld (predicted %d); "
              "zero audio at floor: %s",
              mismatches, static_cast<long>(peak), predicted, floor_ok ? "yes" : "no")};
}

}  // namespace
}  // namespace actrain

int main(int argc, char** argv) {
  using namespace actrain;
  std::string report_path;
  std::set<int> allowed;
  int num_seeds = 5;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--report" && i + 1 < argc) {
      report_path = argv[++i];
    } else if (a == "--allow-fail" && i + 1 < argc) {
      allowed.insert(std::atoi(argv[++i]));
    } else if (a == "--seeds" && i + 1 < argc) {
      num_seeds = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: acceptance [--report PATH] [--allow-fail N]... [--seeds K]\n";
      return 2;
    }
  }
  spdlog::set_level(spdlog::level::warn);

  std::ostringstream detail;
  std::vector<std::pair<int, Outcome>> results;
  auto record = [&](int id, Outcome o) {
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail
              << std::endl;
    results.emplace_back(id, std::move(o));
  };

  record(1, GradientCorrectness());
  record(2, ElboIdentity());
  record(3, ExactMarginalization());
  record(4, SpecialCases());
  record(5, Kmeans());
  record(6, GumbelStatistics());

  std::vector<SeedRun> runs;
  for (int s = 1; s <= num_seeds; ++s) {
    std::ostringstream log;
    runs.push_back(RunSeed(static_cast<std::uint64_t>(s), log));
    std::cout << log.str() << std::flush;
    detail << log.str();
  }
  record(7, SyntheticRecovery(runs));
  record(8, OptimizationOrdering(runs));
  record(9, ProbeSanity(runs));
  record(10, DeterminismAndFormats());
  record(11, FeaturePipeline());

  int unexpected = 0;
  std::ostringstream lines;
  for (const auto& [id, o] : results) {
    lines << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << '\n';
    if (!o.pass && !allowed.count(id)) ++unexpected;
  }
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    out << lines.str() << "\nper-seed runs (synthetic corpus, 200 training utterances):\n"
        << detail.str();
  }
  return unexpected == 0 ? 0 : 1;
}
