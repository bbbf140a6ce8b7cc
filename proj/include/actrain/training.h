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

// Optimization driver.
//
// Checkpoint file (all integers and floats little-endian):
//
//   "ACT1"  u32 version
//   str     config ("key=value\n" lines)
//   u32     block count, then per block: str name, u32 rows, u32 cols, f32[]
//   u64     Adam step, f64 beta1, f64 beta2, f64 epsilon
//   u32     moment count, then per block: str name, u32 rows, u32 cols,
//           f32[] first moment, f32[] second moment
//   u64 x3  RNG seed, stream, counter
//   u64 x2  epoch, optimizer step
//   u32     history count, then per entry: u32 epoch, f64 objective, ce,
//           recon, entropy
//
// where str is a u32 byte length followed by UTF-8 bytes.

#ifndef ACTRAIN_TRAINING_H_
#define ACTRAIN_TRAINING_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "actrain/features.h"
#include "actrain/model.h"
#include "actrain/numerics.h"
#include "actrain/objectives.h"

namespace actrain {

struct TrainConfig {
  Variant variant = Variant::kCotrainExact;
  LatentConfig model;
  double lr = 1e-3;
  int batch_size = 16;
  int epochs = 30;
  std::uint64_t seed = 0;
  double tau_start = 2.0;
  double tau_end = 0.5;
  double tau_decay = 0.99995;  // per optimizer step
  bool straight_through = true;
  double clip_norm = 0.0;  // global gradient-norm clip; 0 disables
  int threads = 1;

  void Validate() const;
  std::string Serialize() const;
  static TrainConfig Parse(const std::string& text);
  bool operator==(const TrainConfig&) const = default;
};

// max(tau_end, tau_start * tau_decay^step).
double Temperature(std::uint64_t step, const TrainConfig& config);

template <typename T>
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::string> names;  // block names, in update order
  std::vector<Matrix<T>> first;
  std::vector<Matrix<T>> second;
};

template <typename T>
using NamedBlocks = std::vector<std::pair<std::string, Matrix<T>*>>;

// Bias-corrected Adam. Moments are created on the first call; later calls must
// pass the same blocks in the same order.
template <typename T>
void AdamStep(const NamedBlocks<T>& params, const std::vector<const Matrix<T>*>& grads,
              AdamState<T>& state, double lr);

// Shuffled index lists of at most batch_size utterances covering [0, size).
std::vector<std::vector<std::size_t>> MakeBatches(std::size_t size, int batch_size, Rng& rng);

struct LossRecord {
  std::uint32_t epoch = 0;
  double objective = 0.0;
  double ce = 0.0;
  double recon = 0.0;
  double entropy = 0.0;
  bool operator==(const LossRecord&) const = default;
};

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;
  TrainConfig config;
  ModelParams<float> params;
  AdamState<float> adam;
  RngState rng;
  std::uint64_t epoch = 0;
  std::uint64_t step = 0;
  std::vector<LossRecord> history;
};

std::string SerializeCheckpoint(const Checkpoint& checkpoint);
Checkpoint DeserializeCheckpoint(const std::string& bytes);
void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

// Zero-filled parameters with the shapes a config implies.
ModelParams<float> ShapeModel(const LatentConfig& config, Variant variant);

// Whole-dataset evaluation of the logged objective with frozen parameters.
// Co-training variants report the co-training objective (the HuBERT-like one
// with hard assignments to the clamped codebook); VQ-APC reports the exact
// marginal log-likelihood; APC the Gaussian log-likelihood.
LossRecord EvaluateObjective(const TrainConfig& config, const ModelParams<float>& params,
                             const FeatureDataset& data,
                             const std::vector<std::vector<int>>* targets);

struct HubertInputs {
  MatrixD centroids;
  std::vector<std::vector<int>> targets;  // aligned with the dataset
};

struct TrainHooks {
  // Called after every completed epoch (including epoch 0, the initial model).
  std::function<void(const Checkpoint&)> on_epoch;
  // Where to write a diagnostic checkpoint if the loss turns non-finite.
  std::filesystem::path diagnostic_path;
};

// Runs epochs until config.epochs. With `resume`, continues from its epoch
// and state; config must match the checkpoint's except for `epochs` and
// `threads`.
Checkpoint Train(const TrainConfig& config, const FeatureDataset& data,
                 const HubertInputs* hubert, const std::optional<Checkpoint>& resume = {},
                 const TrainHooks& hooks = {});

// Loss log CSV: `epoch,variant,objective,ce,recon,entropy`.
void WriteLossLog(const std::filesystem::path& path, Variant variant,
                  const std::vector<LossRecord>& history);

}  // namespace actrain

#endif  // ACTRAIN_TRAINING_H_
