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

#include "actrain/synth.h"

#include <cstdio>
#include <stdexcept>

namespace actrain {
namespace {

// Streams 0 and 1 are reserved for the centroids; utterances start at 16.
constexpr std::uint64_t kCentroidStream = 1;
constexpr std::uint64_t kUtteranceStreamBase = 16;

int SampleRow(const MatrixD& transitions, int from, Rng& rng) {
  const double u = rng.Uniform();
  double running = 0.0;
  const int M = static_cast<int>(transitions.cols());
  for (int j = 0; j < M; ++j) {
    running += transitions(from, j);
    if (u < running) return j;
  }
  return M - 1;
}

}  // namespace

void SynthConfig::Validate() const {
  if (num_states < 1) throw std::invalid_argument("synth: need at least one state");
  if (dim < 1) throw std::invalid_argument("synth: dim must be >= 1");
  if (!(self_transition >= 0.0 && self_transition <= 1.0)) {
    throw std::invalid_argument("synth: self_transition must be in [0, 1]");
  }
  if (!(noise_std >= 0.0)) throw std::invalid_argument("synth: noise_std must be >= 0");
  if (!(min_separation >= 0.0)) throw std::invalid_argument("synth: min_separation must be >= 0");
  if (!(centroid_scale > 0.0)) throw std::invalid_argument("synth: centroid_scale must be > 0");
  if (min_length < 1 || max_length < min_length) {
    throw std::invalid_argument("synth: need 1 <= min_length <= max_length");
  }
  if (num_utterances < 0) throw std::invalid_argument("synth: num_utterances must be >= 0");
}

MatrixD TransitionMatrix(const SynthConfig& config) {
  const int M = config.num_states;
  if (M == 1) return MatrixD::Ones(1, 1);
  const double off = (1.0 - config.self_transition) / (M - 1);
  MatrixD a = MatrixD::Constant(M, M, off);
  a.diagonal().setConstant(config.self_transition);
  return a;
}

MatrixD SampleCentroids(const SynthConfig& config) {
  config.Validate();
  Rng rng(config.seed, kCentroidStream);
  MatrixD mu(config.num_states, config.dim);
  const double s2 = config.min_separation * config.min_separation;
  for (int i = 0; i < config.num_states; ++i) {
    int rejections = 0;
    while (true) {
      for (int c = 0; c < config.dim; ++c) mu(i, c) = config.centroid_scale * rng.Normal();
      bool ok = true;
      for (int j = 0; j < i && ok; ++j) ok = (mu.row(i) - mu.row(j)).squaredNorm() >= s2;
      if (ok) break;
      if (++rejections >= 100000) {
        throw std::runtime_error("synth: cannot place centroids with the requested separation; "
                                 "raise centroid_scale");
      }
    }
  }
  return mu;
}

SynthData Generate(const SynthConfig& config) {
  config.Validate();
  SynthData out;
  out.centroids = SampleCentroids(config);
  out.transitions = TransitionMatrix(config);
  const Rng base(config.seed, 0);
  out.features.resize(config.num_utterances);
  for (int u = 0; u < config.num_utterances; ++u) {
    Rng rng = base.Split(kUtteranceStreamBase + static_cast<std::uint64_t>(u));
    const int len = config.min_length +
                    static_cast<int>(rng.UniformInt(config.max_length - config.min_length + 1));
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%05d", u);
    FeatureSequence seq;
    seq.utterance_id = id;
    seq.frames.resize(len, config.dim);
    std::vector<int> states(len);
    int s = static_cast<int>(rng.UniformInt(config.num_states));
    for (int t = 0; t < len; ++t) {
      if (t > 0) s = SampleRow(out.transitions, s, rng);
      states[t] = s;
      for (int c = 0; c < config.dim; ++c) {
        seq.frames(t, c) =
            static_cast<float>(out.centroids(s, c) + config.noise_std * rng.Normal());
      }
    }
    out.states[seq.utterance_id] = std::move(states);
    out.features[u] = std::move(seq);
  }
  return out;
}

MatrixD OracleCodebook(const SynthConfig& config) { return SampleCentroids(config); }

std::vector<std::string> StateInventory(const SynthConfig& config) {
  std::vector<std::string> names;
  for (int i = 0; i < config.num_states; ++i) names.push_back("s" + std::to_string(i));
  return names;
}

void WriteSynth(const SynthData& data, const SynthConfig& config,
                const std::filesystem::path& dir) {
  ArchiveWrite(data.features, dir);
  WriteAlignments(dir / "alignments.tsv", data.states);
  WritePhoneInventory(dir / "phones.tsv", StateInventory(config));
  WriteFtr(dir / "centroids.ftr", data.centroids.cast<float>());
}

}  // namespace actrain
