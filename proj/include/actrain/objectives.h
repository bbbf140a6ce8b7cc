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

// Training losses. Every loss is a mean over the valid anchor frames of a
// batch; anchor t is valid when both t and t + k are unmasked.
//
// The co-training summand for one anchor is
//
//   L_t = E_q[-ln q(z|x_{t+k}) + ln p(x_{t+k}|z) + ln p(z|x_{1:t})],
//
// a lower bound on ln p(x_{t+k}|x_{1:t}) that is tight when q is the exact
// posterior. The optimizer minimizes -mean(L_t); LossBreakdown reports
// per_frame_objective = mean(L_t) (larger is better).

#ifndef ACTRAIN_OBJECTIVES_H_
#define ACTRAIN_OBJECTIVES_H_

#include <cstdint>
#include <vector>

#include "actrain/model.h"
#include "actrain/numerics.h"

namespace actrain {

struct LossBreakdown {
  double total = 0.0;                // minimized
  double ce_term = 0.0;              // E_q[-ln p(z|x_{1:t})]
  double recon_term = 0.0;           // E_q[-ln p(x_{t+k}|z)]
  double entropy_term = 0.0;         // H(q)
  double per_frame_objective = 0.0;  // mean L_t
  std::size_t frames = 0;
};

struct GumbelConfig {
  double temperature = 2.0;
  bool straight_through = true;
};

// Utterances padded to the longest one in the batch. mask[b][t] = 1 for real
// frames; masks are prefixes of ones.
template <typename T>
struct Batch {
  std::vector<std::size_t> indices;            // positions in the source dataset
  std::vector<Matrix<T>> frames;               // max_len x d each
  std::vector<std::vector<std::uint8_t>> mask;
  std::vector<std::vector<int>> targets;       // hard targets, HuBERT-like only
  Eigen::Index max_len = 0;

  std::size_t size() const { return frames.size(); }
  Eigen::Index Length(std::size_t b) const;
};

template <typename T>
Batch<T> MakeBatch(const FeatureDataset& data, std::span<const std::size_t> indices,
                   const std::vector<std::vector<int>>* targets = nullptr);

// Number of anchors t with mask[t] and mask[t + shift].
template <typename T>
std::size_t CountValidFrames(const Batch<T>& batch, int shift);

enum class ConfirmationMode {
  kSoftmax,    // the model's q
  kPosterior,  // exact posterior p(z | x_{1:t}, x_{t+k}); evaluation only
  kHard,       // one-hot nearest codeword; evaluation only
};

template <typename T>
struct LossOptions {
  int shift = 5;
  GumbelConfig gumbel;
  // Per utterance, row t holds the N noise values for anchor t. Required by
  // cotrain-gumbel and vq-apc.
  const std::vector<Matrix<T>>* gumbel_noise = nullptr;
  T sharpness = T(1);  // beta in q = softmax(-beta ||x - v||^2)
  ConfirmationMode confirmation = ConfirmationMode::kSoftmax;
  int threads = 1;
};

// Gradients are accumulated into *grads (shaped like params) when non-null.
template <typename T>
LossBreakdown CotrainExactLoss(const Batch<T>& batch, const ModelParams<T>& params,
                               const LossOptions<T>& options, ModelParams<T>* grads);

// Exact entropy and reconstruction terms; the cross-entropy term uses one
// Gumbel-softmax sample of q. per_frame_objective is the exact L_t.
template <typename T>
LossBreakdown CotrainGumbelLoss(const Batch<T>& batch, const ModelParams<T>& params,
                                const LossOptions<T>& options, ModelParams<T>* grads);

// Cross entropy against k-means targets (batch.targets) with the codebook
// clamped to the centroids; recon_term is reported for the hard assignment
// and entropy_term is 0. No codebook gradient.
template <typename T>
LossBreakdown HubertLikeLoss(const Batch<T>& batch, const ModelParams<T>& params,
                             const LossOptions<T>& options, ModelParams<T>* grads);

// One Gumbel-softmax sample from the predictor selects e = V^T y, and the
// loss is -ln N(x_{t+k}; W e, I).
template <typename T>
LossBreakdown VqApcLoss(const Batch<T>& batch, const ModelParams<T>& params,
                        const LossOptions<T>& options, ModelParams<T>* grads);

// -ln N(x_{t+k}; A h_t, I) with a trained d x H head A.
template <typename T>
LossBreakdown ApcLoss(const Batch<T>& batch, const ModelParams<T>& params,
                      const LossOptions<T>& options, ModelParams<T>* grads);

template <typename T>
LossBreakdown EvaluateLoss(Variant variant, const Batch<T>& batch, const ModelParams<T>& params,
                           const LossOptions<T>& options, ModelParams<T>* grads);

// Mean over valid anchors of ln sum_z p(x_{t+k}|z) p(z|x_{1:t}). For VQ-APC
// the generator mean is W v_z.
template <typename T>
double MeanMarginalLogLikelihood(const Batch<T>& batch, const ModelParams<T>& params,
                                 int shift);

template <typename T>
std::vector<Matrix<T>> DrawGumbelNoise(const Batch<T>& batch, int num_codes, Rng& rng);
template <typename T>
std::vector<Matrix<T>> ZeroGumbelNoise(const Batch<T>& batch, int num_codes);

struct GradCheckSetup {
  int frame_dim = 4;
  int codebook_size = 5;
  int hidden_dim = 8;
  int num_layers = 2;
  int length = 12;      // longest utterance; the others are shorter, so padding is exercised
  int shift = 2;
  int batch = 2;
  int codeword_dim = 3;  // VQ-APC only
  double sharpness = 1.0;
  double epsilon = 1e-5;
  std::size_t coords_per_block = 200;
};

// Finite-difference check of a variant's f64 gradients on a random tiny model
// and batch, over every trainable block. Gumbel variants use fixed noise with
// the soft relaxation (straight-through off), whose gradient is exact.
GradCheckReport CheckLossGradients(Variant variant, const GradCheckSetup& setup,
                                   std::uint64_t seed);

// Co-training summand for one anchor with an explicit q (any distribution).
template <typename T>
T CotrainSummand(VecRef<T> future_frame, const CodeDistribution<T>& prior,
                 const Matrix<T>& codebook, const CodeDistribution<T>& q) {
  const Vector<T> log_gen = GenerationLogDensities<T>(future_frame, codebook);
  T sum = 0;
  for (Eigen::Index j = 0; j < q.size(); ++j) {
    if (q.probs(j) > 0) {
      sum += q.probs(j) * (-q.log_probs(j) + log_gen(j) + prior.log_probs(j));
    }
  }
  return sum;
}

}  // namespace actrain

#endif  // ACTRAIN_OBJECTIVES_H_
