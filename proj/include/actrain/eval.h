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

// Frozen-model analysis: linear phone probes on hidden layers and code/phone
// co-occurrence.

#ifndef ACTRAIN_EVAL_H_
#define ACTRAIN_EVAL_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "actrain/features.h"
#include "actrain/model.h"
#include "actrain/numerics.h"

namespace actrain {

using Labels = std::vector<std::vector<int>>;  // per utterance, per frame
using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Labels in dataset order. Throws on a missing utterance, a length mismatch
// or an id outside [0, num_phones).
Labels AlignLabels(const FeatureDataset& data, const Alignments& alignments, int num_phones);

// Hidden states of layer `layer` (1-based) for one utterance, T x H.
MatrixF HiddenStates(const ModelParams<float>& params, const MatrixF& frames, int layer);

struct ProbeConfig {
  double lr = 1e-3;
  int epochs = 10;
  int batch_size = 16;  // utterances per update
  std::uint64_t seed = 0;
};

struct ProbeResult {
  int layer = 0;
  double per = 0.0;        // frame error rate on the evaluation split
  std::size_t frames = 0;  // evaluation frames
  CountMatrix confusion;   // P x P, row = reference, column = prediction
};

// Softmax regression H -> P on frozen hidden states, trained with Adam from
// W = 0 and bias = log of the (add-one smoothed) training label prior.
ProbeResult ProbeTrain(const ModelParams<float>& backbone, int layer,
                       const FeatureDataset& train, const Labels& train_labels,
                       const FeatureDataset& eval, const Labels& eval_labels, int num_phones,
                       const ProbeConfig& config);

enum class CodeSource { kPredictor, kConfirmer };
CodeSource ParseCodeSource(std::string_view name);

// Per utterance, entry t is the code for frame t + shift: argmax of the
// predictor's p(z | x_{1:t}) or the nearest codeword to x_{t+shift}.
std::vector<std::vector<int>> ExtractCodes(const ModelParams<float>& params,
                                           const FeatureDataset& data, int shift,
                                           CodeSource source);

struct CodePhoneMatrix {
  MatrixD probs;                         // P x N, column z = p(phone | z)
  std::vector<std::int64_t> occupancy;   // length N
  std::int64_t total = 0;
};

// Co-occurrence of codes[u][t] with labels[u][t + shift].
CodePhoneMatrix CountCodePhones(const std::vector<std::vector<int>>& codes, const Labels& labels,
                                int shift, int num_phones, int num_codes);

CodePhoneMatrix ComputeCodePhoneMatrix(const ModelParams<float>& params,
                                       const FeatureDataset& data, const Labels& labels,
                                       int shift, int num_phones, CodeSource source);

// Occupancy-weighted mean over codes of max_p p(phone | code).
double Purity(const CodePhoneMatrix& matrix);

std::string Sha256Hex(std::string_view bytes);
std::string FileSha256(const std::filesystem::path& path);
// Digest over block names, shapes and f32 values in canonical order.
std::string ParamsDigest(const ModelParams<float>& params);

void WriteProbeCsv(const std::filesystem::path& path, const std::vector<ProbeResult>& results);
void WriteConfusionCsv(const std::filesystem::path& path, const CountMatrix& confusion,
                       const std::vector<std::string>& phones);
void WriteCodePhoneCsv(const std::filesystem::path& path, const CodePhoneMatrix& matrix,
                       const std::vector<std::string>& phones);

}  // namespace actrain

#endif  // ACTRAIN_EVAL_H_
