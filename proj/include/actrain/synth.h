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

// Synthetic frames from a hidden Markov chain with Gaussian emissions:
// s_1 uniform, s_{t+1} ~ A[s_t, :], x_t = mu_{s_t} + noise_std * eps.

#ifndef ACTRAIN_SYNTH_H_
#define ACTRAIN_SYNTH_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "actrain/features.h"
#include "actrain/numerics.h"

namespace actrain {

struct SynthConfig {
  int num_states = 8;              // M
  int dim = 40;                    // d
  double self_transition = 0.7;    // gamma; off-diagonal mass is spread evenly
  double noise_std = 0.5;          // sigma
  double min_separation = 3.0;     // s = 6 sigma
  double centroid_scale = 4.0;     // centroids are centroid_scale * N(0, I) draws
  int min_length = 80;
  int max_length = 160;
  int num_utterances = 200;
  std::uint64_t seed = 0;

  void Validate() const;
};

struct SynthData {
  FeatureDataset features;
  Alignments states;     // keyed by utterance id
  MatrixD centroids;     // M x d
  MatrixD transitions;   // M x M, row-stochastic
};

MatrixD TransitionMatrix(const SynthConfig& config);

// Each draw is rejected while it lies closer than min_separation to an
// accepted one. Throws after 10^5 consecutive rejections.
MatrixD SampleCentroids(const SynthConfig& config);

// Utterance u uses its own RNG stream, so the result does not depend on how
// generation is scheduled.
SynthData Generate(const SynthConfig& config);

// The centroids as an N = M codebook.
MatrixD OracleCodebook(const SynthConfig& config);

// State names "s0".."s{M-1}".
std::vector<std::string> StateInventory(const SynthConfig& config);

// FTR1 archive + manifest.tsv, alignments.tsv, phones.tsv and centroids.ftr.
void WriteSynth(const SynthData& data, const SynthConfig& config,
                const std::filesystem::path& dir);

}  // namespace actrain

#endif  // ACTRAIN_SYNTH_H_
