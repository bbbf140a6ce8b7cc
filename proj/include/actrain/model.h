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

// Latent-code model of speech frames.
//
// A future frame x_{t+k} is generated from a discrete code z in [0, N):
//
//   prediction network    p(z | x_{1:t}) = softmax(h_t^T U)
//   confirmation network  q(z | x)       = softmax(-||x - v_z||^2)
//   generator             p(x | z)       = N(x; W v_z, I)
//
// where h_t is the top hidden state of a causal LSTM stack, U is H x N (code
// z reads column z), V is the N x d_c codebook (code z reads row z) and W is
// d x d_c (identity and frozen for co-training).

#ifndef ACTRAIN_MODEL_H_
#define ACTRAIN_MODEL_H_

#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "actrain/features.h"
#include "actrain/numerics.h"

namespace actrain {

enum class Variant { kCotrainExact, kCotrainGumbel, kHubertLike, kVqApc, kApc };

std::string_view VariantName(Variant v);
Variant ParseVariant(std::string_view name);
bool IsCotraining(Variant v);  // exact, gumbel, hubert-like

// How co-training seeds the codebook from training frames.
enum class CodebookInit {
  kUniformFrames,  // N frames uniformly without replacement
  kSpreadFrames,   // N frames by squared-distance (k-means++ style) sampling
};
std::string_view CodebookInitName(CodebookInit init);
CodebookInit ParseCodebookInit(std::string_view name);

struct LatentConfig {
  int codebook_size = 256;  // N
  int shift = 5;            // k
  int frame_dim = 40;       // d
  int hidden_dim = 512;     // H
  int num_layers = 3;
  int codeword_dim = 40;    // d_c; equals d for co-training, 512 for VQ-APC
  CodebookInit codebook_init = CodebookInit::kSpreadFrames;

  void Validate(Variant variant) const;
  bool operator==(const LatentConfig&) const = default;
};

template <typename T>
struct LstmLayer {
  Matrix<T> w_input;      // 4H x in, gate order i, f, g, o
  Matrix<T> w_recurrent;  // 4H x H
  Matrix<T> bias;         // 4H x 1
};

// Absent blocks are empty matrices.
template <typename T>
struct ModelParams {
  std::vector<LstmLayer<T>> lstm;
  Matrix<T> code_projection;      // U, H x N
  Matrix<T> codebook;             // V, N x d_c
  Matrix<T> codeword_projection;  // W, d x d_c (VQ-APC only)
  Matrix<T> apc_head;             // d x H (APC only)

  int hidden_dim() const { return lstm.empty() ? 0 : static_cast<int>(lstm[0].w_recurrent.cols()); }
  int num_layers() const { return static_cast<int>(lstm.size()); }

  // Canonical order: lstm.<l>.{w_input,w_recurrent,bias}, code_projection,
  // codebook, codeword_projection, apc_head. Empty blocks are skipped.
  std::vector<std::pair<std::string, Matrix<T>*>> Blocks();
  std::vector<std::pair<std::string, const Matrix<T>*>> Blocks() const;

  ModelParams ZerosLike() const;
  void SetZero();
  ModelParams& operator+=(const ModelParams& other);

  template <typename U>
  ModelParams<U> Cast() const {
    ModelParams<U> out;
    for (const auto& layer : lstm) {
      out.lstm.push_back({layer.w_input.template cast<U>(),
                          layer.w_recurrent.template cast<U>(),
                          layer.bias.template cast<U>()});
    }
    out.code_projection = code_projection.template cast<U>();
    out.codebook = codebook.template cast<U>();
    out.codeword_projection = codeword_projection.template cast<U>();
    out.apc_head = apc_head.template cast<U>();
    return out;
  }
};

// Blocks the optimizer updates for a variant. The codebook is frozen for
// HuBERT-like training (clamped to the k-means centroids).
bool IsTrainable(Variant variant, std::string_view block_name);

// LSTM kernels and code_projection ~ U(-1/sqrt(H), 1/sqrt(H)), forget-gate
// bias 1, other biases 0. For co-training the codebook is N frames drawn
// uniformly without replacement from `data`; HuBERT-like callers overwrite it
// with centroids. VQ-APC codewords ~ N(0, 1) and W ~ U(-1/sqrt(d_c), ..).
// APC gets a d x H head ~ U(-1/sqrt(H), ..).
ModelParams<float> InitModel(const LatentConfig& config, Variant variant,
                             const FeatureDataset& data, Rng& rng);

// Per-layer activations of one forward pass, kept for backpropagation.
template <typename T>
struct LstmTrace {
  std::vector<Matrix<T>> gates;   // T x 4H, post-activation (i, f, g, o)
  std::vector<Matrix<T>> cells;   // T x H
  std::vector<Matrix<T>> hidden;  // T x H
};

// Zero initial state; h_t depends only on frames 0..t.
template <typename T>
LstmTrace<T> LstmForward(const ModelParams<T>& params,
                         std::type_identity_t<Eigen::Ref<const Matrix<T>>> frames);

// Backpropagates d(loss)/d(top hidden) through time and accumulates into
// grads.lstm.
template <typename T>
void LstmBackward(const ModelParams<T>& params,
                  std::type_identity_t<Eigen::Ref<const Matrix<T>>> frames,
                  const LstmTrace<T>& trace, Matrix<T> d_top_hidden,
                  ModelParams<T>& grads);

template <typename T>
struct CodeDistribution {
  Vector<T> probs;
  Vector<T> log_probs;

  static CodeDistribution FromLogits(const Vector<T>& logits) {
    CodeDistribution d;
    d.log_probs = LogSoftmax(logits);
    d.probs = d.log_probs.array().exp().matrix();
    return d;
  }
  Eigen::Index size() const { return probs.size(); }
};

template <typename T>
using VecRef = std::type_identity_t<Eigen::Ref<const Vector<T>>>;

// p(z | x_{1:t}) = softmax over the N scores h^T U.
template <typename T>
CodeDistribution<T> PredictorDistribution(VecRef<T> hidden,
                                          const Matrix<T>& code_projection) {
  if (hidden.size() != code_projection.rows()) {
    throw std::invalid_argument("predictor_distribution: hidden size mismatch");
  }
  return CodeDistribution<T>::FromLogits(code_projection.transpose() * hidden);
}

// ||x - v_j||^2 for every codeword.
template <typename T>
Vector<T> CodewordSqDistances(VecRef<T> frame, const Matrix<T>& codebook) {
  if (frame.size() != codebook.cols()) {
    throw std::invalid_argument("codeword distances: dimension mismatch");
  }
  return (codebook.rowwise() - frame.transpose()).rowwise().squaredNorm();
}

// q(z | x) = softmax(-sharpness * ||x - v_z||^2). sharpness = 1 is the model;
// large values approach the one-hot nearest-codeword assignment.
template <typename T>
CodeDistribution<T> ConfirmationDistribution(VecRef<T> frame, const Matrix<T>& codebook,
                                             T sharpness = T(1)) {
  const Vector<T> logits = -sharpness * CodewordSqDistances<T>(frame, codebook);
  return CodeDistribution<T>::FromLogits(logits);
}

// Row z of the generator means: W v_z, or v_z when projection is null.
template <typename T>
Matrix<T> GeneratorMeans(const Matrix<T>& codebook, const Matrix<T>* projection) {
  if (projection == nullptr) return codebook;
  return codebook * projection->transpose();
}

// ln p(x | z) for every z.
template <typename T>
Vector<T> GenerationLogDensities(VecRef<T> frame, const Matrix<T>& codebook,
                                 const Matrix<T>* projection = nullptr) {
  const Matrix<T> means = GeneratorMeans(codebook, projection);
  if (frame.size() != means.cols()) {
    throw std::invalid_argument("generation_log_density: dimension mismatch");
  }
  const T d = static_cast<T>(frame.size());
  const Vector<T> sq = (means.rowwise() - frame.transpose()).rowwise().squaredNorm();
  return (-T(0.5) * d * kLog2Pi<T> - T(0.5) * sq.array()).matrix();
}

// -(d/2) ln 2pi - 1/2 ||x - W v_z||^2.
template <typename T>
T GenerationLogDensity(VecRef<T> frame, Eigen::Index code, const Matrix<T>& codebook,
                       const Matrix<T>* projection = nullptr) {
  if (code < 0 || code >= codebook.rows()) {
    throw std::out_of_range("generation_log_density: code " + std::to_string(code) +
                            " out of range [0, " + std::to_string(codebook.rows()) + ")");
  }
  Vector<T> mean = codebook.row(code).transpose();
  if (projection != nullptr) mean = *projection * mean;
  if (frame.size() != mean.size()) {
    throw std::invalid_argument("generation_log_density: dimension mismatch");
  }
  const T d = static_cast<T>(frame.size());
  return -T(0.5) * d * kLog2Pi<T> - T(0.5) * (frame - mean).squaredNorm();
}

// p(z | x_{1:t}, x_{t+k}) proportional to p(x_{t+k} | z) p(z | x_{1:t}).
template <typename T>
CodeDistribution<T> PosteriorDistribution(VecRef<T> future_frame,
                                          const CodeDistribution<T>& prior,
                                          const Matrix<T>& codebook,
                                          const Matrix<T>* projection = nullptr) {
  if (prior.size() != codebook.rows()) {
    throw std::invalid_argument("posterior_distribution: prior size mismatch");
  }
  const Vector<T> joint = GenerationLogDensities<T>(future_frame, codebook, projection) +
                          prior.log_probs;
  return CodeDistribution<T>::FromLogits(joint);
}

// ln sum_z p(x | z) p(z | x_{1:t}).
template <typename T>
T MarginalLogLikelihood(VecRef<T> future_frame, const CodeDistribution<T>& prior,
                        const Matrix<T>& codebook, const Matrix<T>* projection = nullptr) {
  if (prior.size() != codebook.rows()) {
    throw std::invalid_argument("marginal_log_likelihood: prior size mismatch");
  }
  const Vector<T> joint = GenerationLogDensities<T>(future_frame, codebook, projection) +
                          prior.log_probs;
  return LogSumExp(joint);
}

}  // namespace actrain

#endif  // ACTRAIN_MODEL_H_
