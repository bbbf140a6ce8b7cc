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

#include "actrain/objectives.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <utility>

namespace actrain {
namespace {

struct Sums {
  double total = 0.0;
  double ce = 0.0;
  double recon = 0.0;
  double entropy = 0.0;
  double objective = 0.0;
  std::size_t frames = 0;

  Sums& operator+=(const Sums& o) {
    total += o.total;
    ce += o.ce;
    recon += o.recon;
    entropy += o.entropy;
    objective += o.objective;
    frames += o.frames;
    return *this;
  }
};

// Per-utterance work shared by all heads. `frames` holds the unpadded
// utterance, `top` the top-layer hidden states.
template <typename T>
struct HeadContext {
  std::size_t utterance = 0;
  Eigen::Ref<const Matrix<T>> frames;
  const Matrix<T>& top;
  T scale;  // 1 / (valid frames in batch)
  Sums& sums;
  Matrix<T>* d_top;         // null when gradients are not requested
  ModelParams<T>* grads;
};

template <typename T, typename Head>
LossBreakdown RunLoss(const Batch<T>& batch, const ModelParams<T>& params,
                      const LossOptions<T>& options, ModelParams<T>* grads, Head&& head) {
  const std::size_t n = CountValidFrames(batch, options.shift);
  if (n == 0) {
    throw std::runtime_error("batch has no valid frames (every utterance has T <= shift)");
  }
  const T scale = T(1) / static_cast<T>(n);
  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(options.threads, 1)), 1,
                              std::max<std::size_t>(batch.size(), 1));
  std::vector<Sums> sums(workers);
  std::vector<ModelParams<T>> accum;
  if (grads != nullptr) accum.assign(workers, params.ZerosLike());

  auto work = [&](std::size_t w) {
    const std::size_t begin = batch.size() * w / workers;
    const std::size_t end = batch.size() * (w + 1) / workers;
    for (std::size_t b = begin; b < end; ++b) {
      const Eigen::Index len = batch.Length(b);
      if (len <= options.shift) {
        spdlog::warn("skipping utterance #{}: {} frames <= shift {}", batch.indices.empty() ? b : batch.indices[b],
                     len, options.shift);
        continue;
      }
      auto frames = batch.frames[b].topRows(len);
      const LstmTrace<T> trace = LstmForward(params, frames);
      Matrix<T> d_top;
      if (grads != nullptr) d_top = Matrix<T>::Zero(len, trace.hidden.back().cols());
      HeadContext<T> ctx{b, frames, trace.hidden.back(), scale, sums[w],
                         grads ? &d_top : nullptr, grads ? &accum[w] : nullptr};
      head(ctx);
      if (grads != nullptr) LstmBackward(params, frames, trace, std::move(d_top), accum[w]);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }

  Sums total;
  for (const auto& s : sums) total += s;
  if (grads != nullptr) {
    for (const auto& a : accum) *grads += a;
  }
  LossBreakdown out;
  const double dn = static_cast<double>(n);
  out.total = total.total / dn;
  out.ce_term = total.ce / dn;
  out.recon_term = total.recon / dn;
  out.entropy_term = total.entropy / dn;
  out.per_frame_objective = total.objective / dn;
  out.frames = n;
  return out;
}

template <typename T>
void RequireNoise(const LossOptions<T>& options, const Batch<T>& batch, const char* loss) {
  if (options.gumbel_noise == nullptr || options.gumbel_noise->size() != batch.size()) {
    throw std::invalid_argument(std::string(loss) + ": Gumbel noise missing for the batch");
  }
  if (!(options.gumbel.temperature > 0)) {
    throw std::invalid_argument(std::string(loss) + ": temperature must be > 0");
  }
}

template <typename T>
Vector<T> OneHot(Eigen::Index n, Eigen::Index k) {
  Vector<T> v = Vector<T>::Zero(n);
  v(k) = T(1);
  return v;
}

// Accumulates the predictor-side gradient for one anchor:
// d(loss)/d(logits) = scale * dlogits_unscaled.
template <typename T>
void BackpropPredictor(HeadContext<T>& ctx, const Matrix<T>& projection, Eigen::Index t,
                       const Vector<T>& d_logits) {
  ctx.d_top->row(t).noalias() += (projection * d_logits).transpose();
  ctx.grads->code_projection.noalias() += ctx.top.row(t).transpose() * d_logits.transpose();
}

// Shared by the exact and Gumbel co-training heads: q, generator terms and
// the exact summand for one anchor.
template <typename T>
struct AnchorTerms {
  CodeDistribution<T> prior;
  Vector<T> sq_dist;
  Vector<T> log_gen;
  CodeDistribution<T> q;
  double ce = 0, recon = 0, entropy = 0;
};

template <typename T>
AnchorTerms<T> ComputeAnchor(const Vector<T>& x, const Vector<T>& h,
                             const ModelParams<T>& params, const LossOptions<T>& options) {
  AnchorTerms<T> a;
  a.prior = PredictorDistribution<T>(h, params.code_projection);
  a.sq_dist = CodewordSqDistances<T>(x, params.codebook);
  const T d = static_cast<T>(x.size());
  a.log_gen = (-T(0.5) * d * kLog2Pi<T> - T(0.5) * a.sq_dist.array()).matrix();
  const Eigen::Index N = a.sq_dist.size();
  switch (options.confirmation) {
    case ConfirmationMode::kSoftmax:
      a.q = CodeDistribution<T>::FromLogits(-options.sharpness * a.sq_dist);
      break;
    case ConfirmationMode::kPosterior:
      a.q = CodeDistribution<T>::FromLogits(a.log_gen + a.prior.log_probs);
      break;
    case ConfirmationMode::kHard: {
      const Eigen::Index z = ArgMin(a.sq_dist);
      a.q.probs = OneHot<T>(N, z);
      a.q.log_probs = Vector<T>::Constant(N, -std::numeric_limits<T>::infinity());
      a.q.log_probs(z) = T(0);
      break;
    }
  }
  for (Eigen::Index j = 0; j < N; ++j) {
    const T qj = a.q.probs(j);
    if (qj > 0) {
      a.ce -= qj * a.prior.log_probs(j);
      a.recon -= qj * a.log_gen(j);
      a.entropy -= qj * a.q.log_probs(j);
    }
  }
  a.entropy = std::max(a.entropy, 0.0);
  return a;
}

// Gradient of -scale * E_q[-ln q + ln p(x|z)] w.r.t. the codebook (softmax q
// only), with optional extra per-code coefficients on (x - v_j).
template <typename T>
void AccumulateCodebookGrad(HeadContext<T>& ctx, const Vector<T>& x,
                            const Matrix<T>& codebook, const Vector<T>& coef) {
  // d/dv_j of anything of the form c_j * (x - v_j) sums into row j.
  const Matrix<T> diff = (-(codebook.rowwise() - x.transpose())).eval();
  ctx.grads->codebook.noalias() += coef.asDiagonal() * diff;
}

template <typename T>
void CheckParams(const ModelParams<T>& params, bool need_codebook, const char* loss) {
  if (params.code_projection.size() == 0) {
    throw std::invalid_argument(std::string(loss) + ": model has no code projection");
  }
  if (need_codebook && params.codebook.rows() != params.code_projection.cols()) {
    throw std::invalid_argument(std::string(loss) + ": codebook size differs from projection");
  }
}

}  // namespace

template <typename T>
Eigen::Index Batch<T>::Length(std::size_t b) const {
  Eigen::Index len = 0;
  for (const auto m : mask[b]) len += m ? 1 : 0;
  return len;
}

template <typename T>
Batch<T> MakeBatch(const FeatureDataset& data, std::span<const std::size_t> indices,
                   const std::vector<std::vector<int>>* targets) {
  Batch<T> batch;
  Eigen::Index d = -1;
  for (const std::size_t i : indices) {
    if (i >= data.size()) throw std::out_of_range("MakeBatch: index out of range");
    batch.max_len = std::max(batch.max_len, data[i].frames.rows());
    if (d < 0) d = data[i].frames.cols();
    if (data[i].frames.cols() != d) {
      throw std::invalid_argument("MakeBatch: inconsistent frame dimension");
    }
  }
  for (const std::size_t i : indices) {
    const auto& seq = data[i];
    const Eigen::Index len = seq.frames.rows();
    Matrix<T> padded = Matrix<T>::Zero(batch.max_len, d);
    padded.topRows(len) = seq.frames.template cast<T>();
    std::vector<std::uint8_t> mask(batch.max_len, 0);
    std::fill(mask.begin(), mask.begin() + len, std::uint8_t{1});
    batch.indices.push_back(i);
    batch.frames.push_back(std::move(padded));
    batch.mask.push_back(std::move(mask));
    if (targets != nullptr) {
      const auto& tg = (*targets)[i];
      if (static_cast<Eigen::Index>(tg.size()) != len) {
        throw std::invalid_argument("target length mismatch for utterance " + seq.utterance_id +
                                    ": " + std::to_string(tg.size()) + " targets vs " +
                                    std::to_string(len) + " frames");
      }
      std::vector<int> padded_targets(batch.max_len, 0);
      std::copy(tg.begin(), tg.end(), padded_targets.begin());
      batch.targets.push_back(std::move(padded_targets));
    }
  }
  return batch;
}

template <typename T>
std::size_t CountValidFrames(const Batch<T>& batch, int shift) {
  std::size_t n = 0;
  for (const auto& mask : batch.mask) {
    const auto len = static_cast<std::ptrdiff_t>(mask.size());
    for (std::ptrdiff_t t = 0; t + shift < len; ++t) {
      if (mask[t] && mask[t + shift]) ++n;
    }
  }
  return n;
}

template <typename T>
LossBreakdown CotrainExactLoss(const Batch<T>& batch, const ModelParams<T>& params,
                               const LossOptions<T>& options, ModelParams<T>* grads) {
  CheckParams(params, true, "cotrain_exact_loss");
  if (grads != nullptr && options.confirmation != ConfirmationMode::kSoftmax) {
    throw std::invalid_argument("cotrain_exact_loss: gradients need the softmax confirmation");
  }
  const int k = options.shift;
  const T beta = options.sharpness;
  return RunLoss(batch, params, options, grads, [&](HeadContext<T>& ctx) {
    const Eigen::Index len = ctx.frames.rows();
    for (Eigen::Index t = 0; t + k < len; ++t) {
      const Vector<T> x = ctx.frames.row(t + k).transpose();
      const Vector<T> h = ctx.top.row(t).transpose();
      const AnchorTerms<T> a = ComputeAnchor(x, h, params, options);
      const double summand = -a.ce - a.recon + a.entropy;
      ctx.sums.ce += a.ce;
      ctx.sums.recon += a.recon;
      ctx.sums.entropy += a.entropy;
      ctx.sums.objective += summand;
      ctx.sums.total -= summand;
      ++ctx.sums.frames;
      if (ctx.grads == nullptr) continue;

      // Loss = -scale * L_t.
      BackpropPredictor(ctx, params.code_projection, t,
                        Vector<T>(ctx.scale * (a.prior.probs - a.q.probs)));
      const Vector<T> f = -a.q.log_probs + a.log_gen + a.prior.log_probs;
      const T mean_f = a.q.probs.dot(f);
      const Vector<T> coef =
          -ctx.scale * (T(2) * beta * a.q.probs.cwiseProduct(f.array().matrix() -
                                                              Vector<T>::Constant(f.size(), mean_f)) +
                        a.q.probs);
      AccumulateCodebookGrad(ctx, x, params.codebook, coef);
    }
  });
}

template <typename T>
LossBreakdown CotrainGumbelLoss(const Batch<T>& batch, const ModelParams<T>& params,
                                const LossOptions<T>& options, ModelParams<T>* grads) {
  CheckParams(params, true, "cotrain_gumbel_loss");
  RequireNoise(options, batch, "cotrain_gumbel_loss");
  if (options.confirmation != ConfirmationMode::kSoftmax) {
    throw std::invalid_argument("cotrain_gumbel_loss: only the softmax confirmation is supported");
  }
  const int k = options.shift;
  const T beta = options.sharpness;
  const T tau = static_cast<T>(options.gumbel.temperature);
  return RunLoss(batch, params, options, grads, [&](HeadContext<T>& ctx) {
    const Matrix<T>& noise = (*options.gumbel_noise)[ctx.utterance];
    const Eigen::Index len = ctx.frames.rows();
    for (Eigen::Index t = 0; t + k < len; ++t) {
      const Vector<T> x = ctx.frames.row(t + k).transpose();
      const Vector<T> h = ctx.top.row(t).transpose();
      const AnchorTerms<T> a = ComputeAnchor(x, h, params, options);
      const Eigen::Index N = a.q.size();

      const Vector<T> noisy = (-beta * a.sq_dist + noise.row(t).transpose()) / tau;
      const Vector<T> y_soft = Softmax(noisy);
      const Vector<T> y = options.gumbel.straight_through ? OneHot<T>(N, ArgMax(y_soft)) : y_soft;
      const double ce_sample = -y.dot(a.prior.log_probs);

      ctx.sums.ce += ce_sample;
      ctx.sums.recon += a.recon;
      ctx.sums.entropy += a.entropy;
      ctx.sums.objective += -a.ce - a.recon + a.entropy;
      ctx.sums.total += ce_sample + a.recon - a.entropy;
      ++ctx.sums.frames;
      if (ctx.grads == nullptr) continue;

      BackpropPredictor(ctx, params.code_projection, t,
                        Vector<T>(ctx.scale * (a.prior.probs - y)));
      // recon - entropy = -E_q[ln p(x|z) - ln q].
      const Vector<T> f = a.log_gen - a.q.log_probs;
      const T mean_f = a.q.probs.dot(f);
      Vector<T> coef = -(T(2) * beta *
                             a.q.probs.cwiseProduct(f - Vector<T>::Constant(N, mean_f)) +
                         a.q.probs);
      // Sampled CE through the relaxed sample (straight-through on the hard
      // forward value): d/ds_j = y_soft_j (c_j - E[c]) / tau with c = -ln p.
      const Vector<T> c = -a.prior.log_probs;
      const T mean_c = y_soft.dot(c);
      coef += (T(2) * beta / tau) * y_soft.cwiseProduct(c - Vector<T>::Constant(N, mean_c));
      AccumulateCodebookGrad(ctx, x, params.codebook, Vector<T>(ctx.scale * coef));
    }
  });
}

template <typename T>
LossBreakdown HubertLikeLoss(const Batch<T>& batch, const ModelParams<T>& params,
                             const LossOptions<T>& options, ModelParams<T>* grads) {
  CheckParams(params, true, "hubert_like_loss");
  if (batch.targets.size() != batch.size()) {
    throw std::invalid_argument("hubert_like_loss: batch has no hard targets");
  }
  const int k = options.shift;
  return RunLoss(batch, params, options, grads, [&](HeadContext<T>& ctx) {
    const auto& targets = batch.targets[ctx.utterance];
    const Eigen::Index len = ctx.frames.rows();
    const Eigen::Index N = params.codebook.rows();
    for (Eigen::Index t = 0; t + k < len; ++t) {
      const int z = targets[t + k];
      if (z < 0 || z >= N) {
        throw std::out_of_range("hubert_like_loss: target " + std::to_string(z) +
                                " outside [0, " + std::to_string(N) + ")");
      }
      const Vector<T> x = ctx.frames.row(t + k).transpose();
      const Vector<T> h = ctx.top.row(t).transpose();
      const CodeDistribution<T> prior = PredictorDistribution<T>(h, params.code_projection);
      const double ce = -prior.log_probs(z);
      const double recon = -GenerationLogDensity<T>(x, z, params.codebook);
      ctx.sums.ce += ce;
      ctx.sums.recon += recon;
      ctx.sums.objective += -ce - recon;
      ctx.sums.total += ce;
      ++ctx.sums.frames;
      if (ctx.grads == nullptr) continue;
      BackpropPredictor(ctx, params.code_projection, t,
                        Vector<T>(ctx.scale * (prior.probs - OneHot<T>(N, z))));
    }
  });
}

template <typename T>
LossBreakdown VqApcLoss(const Batch<T>& batch, const ModelParams<T>& params,
                        const LossOptions<T>& options, ModelParams<T>* grads) {
  CheckParams(params, true, "vq_apc_loss");
  RequireNoise(options, batch, "vq_apc_loss");
  const Matrix<T>& W = params.codeword_projection;
  if (W.rows() == 0 || W.cols() != params.codebook.cols()) {
    throw std::invalid_argument("vq_apc_loss: codeword projection must be d x d_c");
  }
  const int k = options.shift;
  const T tau = static_cast<T>(options.gumbel.temperature);
  return RunLoss(batch, params, options, grads, [&](HeadContext<T>& ctx) {
    const Matrix<T>& noise = (*options.gumbel_noise)[ctx.utterance];
    const Eigen::Index len = ctx.frames.rows();
    const Eigen::Index N = params.codebook.rows();
    const T half_d_log2pi = T(0.5) * static_cast<T>(ctx.frames.cols()) * kLog2Pi<T>;
    for (Eigen::Index t = 0; t + k < len; ++t) {
      const Vector<T> x = ctx.frames.row(t + k).transpose();
      const Vector<T> h = ctx.top.row(t).transpose();
      const Vector<T> logits = params.code_projection.transpose() * h;
      const Vector<T> y_soft = Softmax(Vector<T>((logits + noise.row(t).transpose()) / tau));
      const Vector<T> y = options.gumbel.straight_through ? OneHot<T>(N, ArgMax(y_soft)) : y_soft;
      const Vector<T> e = params.codebook.transpose() * y;
      const Vector<T> r = W * e - x;
      const double loss = half_d_log2pi + T(0.5) * r.squaredNorm();
      ctx.sums.recon += loss;
      ctx.sums.objective -= loss;
      ctx.sums.total += loss;
      ++ctx.sums.frames;
      if (ctx.grads == nullptr) continue;

      const Vector<T> rs = ctx.scale * r;
      ctx.grads->codeword_projection.noalias() += rs * e.transpose();
      const Vector<T> de = W.transpose() * rs;
      ctx.grads->codebook.noalias() += y * de.transpose();
      const Vector<T> dy = params.codebook * de;
      const T mean_dy = y_soft.dot(dy);
      const Vector<T> d_logits =
          y_soft.cwiseProduct(dy - Vector<T>::Constant(N, mean_dy)) / tau;
      BackpropPredictor(ctx, params.code_projection, t, d_logits);
    }
  });
}

template <typename T>
LossBreakdown ApcLoss(const Batch<T>& batch, const ModelParams<T>& params,
                      const LossOptions<T>& options, ModelParams<T>* grads) {
  const Matrix<T>& A = params.apc_head;
  if (A.size() == 0 || A.cols() != params.hidden_dim()) {
    throw std::invalid_argument("apc_loss: model has no d x H prediction head");
  }
  const int k = options.shift;
  return RunLoss(batch, params, options, grads, [&](HeadContext<T>& ctx) {
    const Eigen::Index len = ctx.frames.rows();
    const T half_d_log2pi = T(0.5) * static_cast<T>(ctx.frames.cols()) * kLog2Pi<T>;
    for (Eigen::Index t = 0; t + k < len; ++t) {
      const Vector<T> x = ctx.frames.row(t + k).transpose();
      const Vector<T> h = ctx.top.row(t).transpose();
      const Vector<T> r = A * h - x;
      const double loss = half_d_log2pi + T(0.5) * r.squaredNorm();
      ctx.sums.recon += loss;
      ctx.sums.objective -= loss;
      ctx.sums.total += loss;
      ++ctx.sums.frames;
      if (ctx.grads == nullptr) continue;
      const Vector<T> rs = ctx.scale * r;
      ctx.grads->apc_head.noalias() += rs * h.transpose();
      ctx.d_top->row(t).noalias() += (A.transpose() * rs).transpose();
    }
  });
}

template <typename T>
LossBreakdown EvaluateLoss(Variant variant, const Batch<T>& batch, const ModelParams<T>& params,
                           const LossOptions<T>& options, ModelParams<T>* grads) {
  switch (variant) {
    case Variant::kCotrainExact: return CotrainExactLoss(batch, params, options, grads);
    case Variant::kCotrainGumbel: return CotrainGumbelLoss(batch, params, options, grads);
    case Variant::kHubertLike: return HubertLikeLoss(batch, params, options, grads);
    case Variant::kVqApc: return VqApcLoss(batch, params, options, grads);
    case Variant::kApc: return ApcLoss(batch, params, options, grads);
  }
  throw std::invalid_argument("EvaluateLoss: unknown variant");
}

template <typename T>
double MeanMarginalLogLikelihood(const Batch<T>& batch, const ModelParams<T>& params, int shift) {
  LossOptions<T> options;
  options.shift = shift;
  if (params.apc_head.size() != 0) {
    return ApcLoss<T>(batch, params, options, nullptr).per_frame_objective;
  }
  const Matrix<T>* projection =
      params.codeword_projection.size() ? &params.codeword_projection : nullptr;
  return RunLoss<T>(batch, params, options, nullptr, [&](HeadContext<T>& ctx) {
           const Eigen::Index len = ctx.frames.rows();
           for (Eigen::Index t = 0; t + shift < len; ++t) {
             const Vector<T> x = ctx.frames.row(t + shift).transpose();
             const CodeDistribution<T> prior = PredictorDistribution<T>(
                 ctx.top.row(t).transpose(), params.code_projection);
             ctx.sums.objective +=
                 MarginalLogLikelihood<T>(x, prior, params.codebook, projection);
             ++ctx.sums.frames;
           }
         })
      .per_frame_objective;
}

template <typename T>
std::vector<Matrix<T>> DrawGumbelNoise(const Batch<T>& batch, int num_codes, Rng& rng) {
  std::vector<Matrix<T>> noise;
  noise.reserve(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    Matrix<T> g(batch.Length(b), num_codes);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      g.data()[i] = static_cast<T>(GumbelFromUniform(rng.UniformOpen()));
    }
    noise.push_back(std::move(g));
  }
  return noise;
}

template <typename T>
std::vector<Matrix<T>> ZeroGumbelNoise(const Batch<T>& batch, int num_codes) {
  std::vector<Matrix<T>> noise;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    noise.push_back(Matrix<T>::Zero(batch.Length(b), num_codes));
  }
  return noise;
}

#define ACTRAIN_INSTANTIATE_OBJECTIVES(T)                                                     \
  template struct Batch<T>;                                                                   \
  template Batch<T> MakeBatch<T>(const FeatureDataset&, std::span<const std::size_t>,         \
                                 const std::vector<std::vector<int>>*);                       \
  template std::size_t CountValidFrames<T>(const Batch<T>&, int);                             \
  template LossBreakdown CotrainExactLoss<T>(const Batch<T>&, const ModelParams<T>&,          \
                                             const LossOptions<T>&, ModelParams<T>*);         \
  template LossBreakdown CotrainGumbelLoss<T>(const Batch<T>&, const ModelParams<T>&,         \
                                              const LossOptions<T>&, ModelParams<T>*);        \
  template LossBreakdown HubertLikeLoss<T>(const Batch<T>&, const ModelParams<T>&,            \
                                           const LossOptions<T>&, ModelParams<T>*);           \
  template LossBreakdown VqApcLoss<T>(const Batch<T>&, const ModelParams<T>&,                 \
                                      const LossOptions<T>&, ModelParams<T>*);                \
  template LossBreakdown ApcLoss<T>(const Batch<T>&, const ModelParams<T>&,                   \
                                    const LossOptions<T>&, ModelParams<T>*);                  \
  template LossBreakdown EvaluateLoss<T>(Variant, const Batch<T>&, const ModelParams<T>&,     \
                                         const LossOptions<T>&, ModelParams<T>*);             \
  template double MeanMarginalLogLikelihood<T>(const Batch<T>&, const ModelParams<T>&, int);  \
  template std::vector<Matrix<T>> DrawGumbelNoise<T>(const Batch<T>&, int, Rng&);             \
  template std::vector<Matrix<T>> ZeroGumbelNoise<T>(const Batch<T>&, int);

ACTRAIN_INSTANTIATE_OBJECTIVES(float)
ACTRAIN_INSTANTIATE_OBJECTIVES(double)

#undef ACTRAIN_INSTANTIATE_OBJECTIVES

GradCheckReport CheckLossGradients(Variant variant, const GradCheckSetup& setup,
                                   std::uint64_t seed) {
  Rng rng(seed, 11);
  FeatureDataset data;
  for (int b = 0; b < setup.batch; ++b) {
    const int len = std::max(setup.shift + 1, setup.length - 3 * b);
    FeatureSequence seq;
    seq.utterance_id = "u" + std::to_string(b);
    seq.frames.resize(len, setup.frame_dim);
    for (Eigen::Index i = 0; i < seq.frames.size(); ++i) {
      seq.frames.data()[i] = static_cast<float>(rng.Normal());
    }
    data.push_back(std::move(seq));
  }
  LatentConfig config;
  config.frame_dim = setup.frame_dim;
  config.codebook_size = setup.codebook_size;
  config.hidden_dim = setup.hidden_dim;
  config.num_layers = setup.num_layers;
  config.shift = setup.shift;
  config.codeword_dim = variant == Variant::kVqApc ? setup.codeword_dim : setup.frame_dim;
  config.codebook_init = CodebookInit::kUniformFrames;
  ModelParams<double> params = InitModel(config, variant, data, rng).Cast<double>();
  // Random biases, so bias gradients are not checked only at the initial values.
  for (auto& layer : params.lstm) {
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias.data()[i] += 0.3 * rng.Normal();
  }

  std::vector<std::vector<int>> targets;
  for (const auto& seq : data) {
    std::vector<int> t(seq.frames.rows());
    for (auto& z : t) z = static_cast<int>(rng.UniformInt(setup.codebook_size));
    targets.push_back(std::move(t));
  }
  std::vector<std::size_t> indices(data.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  const Batch<double> batch = MakeBatch<double>(
      data, indices, variant == Variant::kHubertLike ? &targets : nullptr);

  LossOptions<double> options;
  options.shift = setup.shift;
  options.sharpness = setup.sharpness;
  options.gumbel.temperature = 0.7;
  options.gumbel.straight_through = false;
  const std::vector<MatrixD> noise = DrawGumbelNoise(batch, setup.codebook_size, rng);
  options.gumbel_noise = &noise;

  ModelParams<double> grads = params.ZerosLike();
  EvaluateLoss(variant, batch, params, options, &grads);
  std::vector<GradCheckBlock> blocks;
  auto values = params.Blocks();
  const auto gradients = std::as_const(grads).Blocks();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!IsTrainable(variant, values[i].first)) continue;
    blocks.push_back({values[i].first, values[i].second, gradients[i].second});
  }
  const auto loss = [&] {
    return EvaluateLoss<double>(variant, batch, params, options, nullptr).total;
  };
  return GradCheck(loss, blocks, setup.epsilon, rng, setup.coords_per_block);
}

}  // namespace actrain
