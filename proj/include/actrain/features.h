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

// Acoustic front end and on-disk formats.
//
// FTR1 feature file: "FTR1", u32 LE rows, u32 LE cols, rows*cols f32 LE,
// row-major. Normalization stats are an FTR1 file with two rows (mean, std).
// Manifests and alignments are UTF-8 TSV with LF line endings.

#ifndef ACTRAIN_FEATURES_H_
#define ACTRAIN_FEATURES_H_

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "actrain/numerics.h"

namespace actrain {

struct FeatureSequence {
  std::string utterance_id;
  MatrixF frames;  // T x d
  double frame_hop_ms = 10.0;
};

using FeatureDataset = std::vector<FeatureSequence>;

struct NormStats {
  VectorD mean;
  VectorD std;  // entries >= 1e-8
};

struct WavData {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = 0;
};

// 16-bit PCM mono RIFF/WAVE only.
WavData ReadWav(const std::filesystem::path& path);
void WriteWav(const std::filesystem::path& path, std::span<const double> samples,
              int sample_rate);

struct LogMelOptions {
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int num_mels = 40;
  double preemphasis = 0.0;  // 0 disables
  double energy_floor = 1e-10;
};

int NextPowerOfTwo(int n);
double HzToMel(double hz);  // HTK: 2595 log10(1 + f/700)
double MelToHz(double mel);

// Triangular filters on the power spectrum of an `fft_size` real FFT. Filter m
// rises from edge m to edge m+1 and falls to edge m+2, with num_mels + 2
// edges equally spaced on the mel scale from 0 Hz to sample_rate / 2.
// Returns num_mels x (fft_size/2 + 1).
MatrixD MelFilterbank(int sample_rate, int fft_size, int num_mels);

// T = 1 + floor((S - win) / hop); Hamming window, power spectrum, mel
// filterbank, ln(max(energy, floor)).
MatrixF LogMel(std::span<const double> samples, int sample_rate,
               const LogMelOptions& options = {});

int NumFrames(std::size_t num_samples, int window, int hop);

NormStats ComputeNormStats(const FeatureDataset& dataset);
FeatureSequence Normalize(const FeatureSequence& seq, const NormStats& stats);

void WriteFtr(const std::filesystem::path& path, const MatrixF& m);
MatrixF ReadFtr(const std::filesystem::path& path);
void WriteNormStats(const std::filesystem::path& path, const NormStats& stats);
NormStats ReadNormStats(const std::filesystem::path& path);

// `utt_id<TAB>relative_path` per line; paths resolve against the manifest's
// directory.
using Manifest = std::vector<std::pair<std::string, std::string>>;
Manifest ReadManifest(const std::filesystem::path& path);
void WriteManifest(const std::filesystem::path& path, const Manifest& manifest);

// Writes <dir>/<utt>.ftr for every sequence plus <dir>/manifest.tsv.
void ArchiveWrite(const FeatureDataset& dataset, const std::filesystem::path& dir);
FeatureDataset ArchiveRead(const std::filesystem::path& manifest_path);

// `utt_id<TAB>l_1 l_2 ... l_T` per line; ids are non-negative integers.
using Alignments = std::map<std::string, std::vector<int>>;
Alignments ReadAlignments(const std::filesystem::path& path);
void WriteAlignments(const std::filesystem::path& path, const Alignments& alignments);

// `id<TAB>name`; ids must cover 0..P-1.
std::vector<std::string> ReadPhoneInventory(const std::filesystem::path& path);
void WritePhoneInventory(const std::filesystem::path& path,
                         const std::vector<std::string>& names);

}  // namespace actrain

#endif  // ACTRAIN_FEATURES_H_
