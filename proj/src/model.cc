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

#include "actrain/model.h"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace actrain {
namespace {

template <typename T>
T Sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

MatrixF UniformMatrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
  MatrixF m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<float>((2.0 * rng.Uniform() - 1.0) * bound);
  }
  return m;
}

}  // namespace

std::string_view VariantName(Variant v) {
  switch (v) {
    case Variant::kCotrainExact: return "cotrain-exact";
    case Variant::kCotrainGumbel: return "cotrain-gumbel";
    case Variant::kHubertLike: return "hubert-like";
    case Variant::kVqApc: return "vq-apc";
    case Variant::kApc: return "apc";
  }
  return "unknown";
}

Variant ParseVariant(std::string_view name) {
  for (Variant v : {Variant::kCotrainExact, Variant::kCotrainGumbel, Variant::kHubertLike,
                    Variant::kVqApc, Variant::kApc}) {
    if (VariantName(v) == name) return v;
  }
  throw std::invalid_argument("unknown variant '" + std::string(name) + "'");
}

std::string_view CodebookInitName(CodebookInit init) {
  return init == CodebookInit::kUniformFrames ? "uniform" : "spread";
}

CodebookInit ParseCodebookInit(std::string_view name) {
  if (name == "uniform") return CodebookInit::kUniformFrames;
  if (name == "spread") return CodebookInit::kSpreadFrames;
  throw std::invalid_argument("unknown codebook init '" + std::string(name) +
                              "' (expected uniform or spread)");
}

bool IsCotraining(Variant v) {
  return v == Variant::kCotrainExact || v == Variant::kCotrainGumbel ||
         v == Variant::kHubertLike;
}

void LatentConfig::Validate(Variant variant) const {
  if (codebook_size < 1) throw std::invalid_argument("codebook size must be >= 1");
  if (shift < 1) throw std::invalid_argument("time shift must be >= 1");
  if (frame_dim < 1 || hidden_dim < 1) throw std::invalid_argument("dimensions must be >= 1");
  if (num_layers < 1) throw std::invalid_argument("need at least one LSTM layer");
  if (IsCotraining(variant) && codeword_dim != frame_dim) {
    throw std::invalid_argument("co-training codewords must have the frame dimension");
  }
  if (codeword_dim < 1) throw std::invalid_argument("codeword dimension must be >= 1");
}

template <typename T>
std::vector<std::pair<std::string, Matrix<T>*>> ModelParams<T>::Blocks() {
  std::vector<std::pair<std::string, Matrix<T>*>> out;
  for (std::size_t l = 0; l < lstm.size(); ++l) {
    const std::string prefix = "lstm." + std::to_string(l) + ".";
    out.emplace_back(prefix + "w_input", &lstm[l].w_input);
    out.emplace_back(prefix + "w_recurrent", &lstm[l].w_recurrent);
    out.emplace_back(prefix + "bias", &lstm[l].bias);
  }
  if (code_projection.size()) out.emplace_back("code_projection", &code_projection);
  if (codebook.size()) out.emplace_back("codebook", &codebook);
  if (codeword_projection.size()) out.emplace_back("codeword_projection", &codeword_projection);
  if (apc_head.size()) out.emplace_back("apc_head", &apc_head);
  return out;
}

template <typename T>
std::vector<std::pair<std::string, const Matrix<T>*>> ModelParams<T>::Blocks() const {
  auto mut = const_cast<ModelParams<T>*>(this)->Blocks();
  std::vector<std::pair<std::string, const Matrix<T>*>> out;
  out.reserve(mut.size());
  for (auto& [name, ptr] : mut) out.emplace_back(std::move(name), ptr);
  return out;
}

template <typename T>
ModelParams<T> ModelParams<T>::ZerosLike() const {
  ModelParams out = *this;
  out.SetZero();
  return out;
}

template <typename T>
void ModelParams<T>::SetZero() {
  for (auto& [name, m] : Blocks()) m->setZero();
}

template <typename T>
ModelParams<T>& ModelParams<T>::operator+=(const ModelParams& other) {
  auto mine = Blocks();
  const auto theirs = other.Blocks();
  if (mine.size() != theirs.size()) throw std::invalid_argument("ModelParams += : block mismatch");
  for (std::size_t i = 0; i < mine.size(); ++i) *mine[i].second += *theirs[i].second;
  return *this;
}

bool IsTrainable(Variant variant, std::string_view block_name) {
  if (variant == Variant::kHubertLike && block_name == "codebook") return false;
  return true;
}

ModelParams<float> InitModel(const LatentConfig& config, Variant variant,
                             const FeatureDataset& data, Rng& rng) {
  config.Validate(variant);
  const int H = config.hidden_dim;
  const double bound = 1.0 / std::sqrt(static_cast<double>(H));
  ModelParams<float> p;
  int in = config.frame_dim;
  for (int l = 0; l < config.num_layers; ++l) {
    LstmLayer<float> layer;
    layer.w_input = UniformMatrix(4 * H, in, bound, rng);
    layer.w_recurrent = UniformMatrix(4 * H, H, bound, rng);
    layer.bias = MatrixF::Zero(4 * H, 1);
    layer.bias.middleRows(H, H).setOnes();
    p.lstm.push_back(std::move(layer));
    in = H;
  }

  const int N = config.codebook_size;
  const int d = config.frame_dim;
  switch (variant) {
    case Variant::kCotrainExact:
    case Variant::kCotrainGumbel:
    case Variant::kHubertLike: {
      p.code_projection = UniformMatrix(H, N, bound, rng);
      std::vector<std::pair<std::size_t, Eigen::Index>> frames;
      for (std::size_t u = 0; u < data.size(); ++u) {
        if (data[u].frames.cols() != d) {
          throw std::invalid_argument("InitModel: utterance " + data[u].utterance_id +
                                      " has the wrong frame dimension");
        }
        for (Eigen::Index t = 0; t < data[u].frames.rows(); ++t) frames.emplace_back(u, t);
      }
      if (frames.size() < static_cast<std::size_t>(N)) {
        throw std::invalid_argument("InitModel: need at least N frames to seed the codebook");
      }
      p.codebook.resize(N, d);
      if (config.codebook_init == CodebookInit::kUniformFrames) {
        // Partial Fisher-Yates: first N entries are a uniform sample without replacement.
        for (int j = 0; j < N; ++j) {
          const auto pick = j + rng.UniformInt(frames.size() - j);
          std::swap(frames[j], frames[pick]);
          p.codebook.row(j) = data[frames[j].first].frames.row(frames[j].second);
        }
      } else {
        // D^2 sampling: each next frame drawn with probability proportional to its
        // squared distance from the nearest frame already taken.
        auto row = [&](std::size_t i) { return data[frames[i].first].frames.row(frames[i].second); };
        std::vector<double> d2(frames.size(), std::numeric_limits<double>::infinity());
        std::size_t pick = rng.UniformInt(frames.size());
        for (int j = 0; j < N; ++j) {
          if (j > 0) {
            double total = 0.0;
            for (const double v : d2) total += v;
            if (total > 0.0) {
              const double target = rng.Uniform() * total;
              double running = 0.0;
              pick = frames.size();
              for (std::size_t i = 0; i < frames.size(); ++i) {
                running += d2[i];
                if (target < running && d2[i] > 0.0) {
                  pick = i;
                  break;
                }
              }
              if (pick == frames.size()) {
                pick = frames.size() - 1;
                while (pick > 0 && !(d2[pick] > 0.0)) --pick;
              }
            } else {
              pick = rng.UniformInt(frames.size());
            }
          }
          p.codebook.row(j) = row(pick);
          for (std::size_t i = 0; i < frames.size(); ++i) {
            d2[i] = std::min(d2[i], static_cast<double>((row(i) - p.codebook.row(j)).squaredNorm()));
          }
        }
      }
      break;
    }
    case Variant::kVqApc: {
      p.code_projection = UniformMatrix(H, N, bound, rng);
      p.codebook.resize(N, config.codeword_dim);
      for (Eigen::Index i = 0; i < p.codebook.size(); ++i) {
        p.codebook.data()[i] = static_cast<float>(rng.Normal());
      }
      p.codeword_projection = UniformMatrix(
          d, config.codeword_dim, 1.0 / std::sqrt(static_cast<double>(config.codeword_dim)), rng);
      break;
    }
    case Variant::kApc:
      p.apc_head = UniformMatrix(d, H, bound, rng);
      break;
  }
  return p;
}

template <typename T>
LstmTrace<T> LstmForward(const ModelParams<T>& params,
                         std::type_identity_t<Eigen::Ref<const Matrix<T>>> frames) {
  const Eigen::Index steps = frames.rows();
  LstmTrace<T> trace;
  trace.gates.reserve(params.lstm.size());
  trace.cells.reserve(params.lstm.size());
  trace.hidden.reserve(params.lstm.size());
  for (std::size_t l = 0; l < params.lstm.size(); ++l) {
    const LstmLayer<T>& layer = params.lstm[l];
    const Eigen::Index H = layer.w_recurrent.cols();
    const Eigen::Index in_dim = layer.w_input.cols();
    const Matrix<T>* below = l == 0 ? nullptr : &trace.hidden[l - 1];
    if ((l == 0 ? frames.cols() : below->cols()) != in_dim) {
      throw std::invalid_argument("lstm_forward: input dimension mismatch at layer " +
                                  std::to_string(l));
    }
    Matrix<T> gates(steps, 4 * H);
    if (l == 0) {
      gates.noalias() = frames * layer.w_input.transpose();
    } else {
      gates.noalias() = *below * layer.w_input.transpose();
    }
    gates.rowwise() += layer.bias.col(0).transpose();

    Matrix<T> cells(steps, H);
    Matrix<T> hidden(steps, H);
    for (Eigen::Index t = 0; t < steps; ++t) {
      auto row = gates.row(t);
      if (t > 0) row.noalias() += hidden.row(t - 1) * layer.w_recurrent.transpose();
      for (Eigen::Index j = 0; j < H; ++j) {
        const T i = Sigmoid(row(j));
        const T f = Sigmoid(row(H + j));
        const T g = std::tanh(row(2 * H + j));
        const T o = Sigmoid(row(3 * H + j));
        const T c_prev = t > 0 ? cells(t - 1, j) : T(0);
        const T c = f * c_prev + i * g;
        row(j) = i;
        row(H + j) = f;
        row(2 * H + j) = g;
        row(3 * H + j) = o;
        cells(t, j) = c;
        hidden(t, j) = o * std::tanh(c);
      }
    }
    trace.gates.push_back(std::move(gates));
    trace.cells.push_back(std::move(cells));
    trace.hidden.push_back(std::move(hidden));
  }
  return trace;
}

template <typename T>
void LstmBackward(const ModelParams<T>& params,
                  std::type_identity_t<Eigen::Ref<const Matrix<T>>> frames,
                  const LstmTrace<T>& trace, Matrix<T> d_top_hidden,
                  ModelParams<T>& grads) {
  Matrix<T> d_out = std::move(d_top_hidden);
  for (std::size_t l = params.lstm.size(); l-- > 0;) {
    const LstmLayer<T>& layer = params.lstm[l];
    LstmLayer<T>& g_layer = grads.lstm[l];
    const Eigen::Index H = layer.w_recurrent.cols();
    const Eigen::Index steps = d_out.rows();
    const Matrix<T>& gates = trace.gates[l];
    const Matrix<T>& cells = trace.cells[l];
    const Matrix<T>& hidden = trace.hidden[l];

    Matrix<T> d_pre(steps, 4 * H);
    Vector<T> dh_next = Vector<T>::Zero(H);
    Vector<T> dc_next = Vector<T>::Zero(H);
    for (Eigen::Index t = steps; t-- > 0;) {
      for (Eigen::Index j = 0; j < H; ++j) {
        const T i = gates(t, j), f = gates(t, H + j), g = gates(t, 2 * H + j),
                o = gates(t, 3 * H + j);
        const T tc = std::tanh(cells(t, j));
        const T c_prev = t > 0 ? cells(t - 1, j) : T(0);
        const T dh = d_out(t, j) + dh_next(j);
        const T dc = dh * o * (T(1) - tc * tc) + dc_next(j);
        d_pre(t, j) = dc * g * i * (T(1) - i);
        d_pre(t, H + j) = dc * c_prev * f * (T(1) - f);
        d_pre(t, 2 * H + j) = dc * i * (T(1) - g * g);
        d_pre(t, 3 * H + j) = dh * tc * o * (T(1) - o);
        dc_next(j) = dc * f;
      }
      dh_next.noalias() = layer.w_recurrent.transpose() * d_pre.row(t).transpose();
    }

    if (l == 0) {
      g_layer.w_input.noalias() += d_pre.transpose() * frames;
    } else {
      g_layer.w_input.noalias() += d_pre.transpose() * trace.hidden[l - 1];
    }
    if (steps > 1) {
      g_layer.w_recurrent.noalias() +=
          d_pre.bottomRows(steps - 1).transpose() * hidden.topRows(steps - 1);
    }
    g_layer.bias.col(0) += d_pre.colwise().sum().transpose();
    if (l > 0) d_out = d_pre * layer.w_input;
  }
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template LstmTrace<float> LstmForward<float>(const ModelParams<float>&,
                                             Eigen::Ref<const MatrixF>);
template LstmTrace<double> LstmForward<double>(const ModelParams<double>&,
                                               Eigen::Ref<const MatrixD>);
template void LstmBackward<float>(const ModelParams<float>&, Eigen::Ref<const MatrixF>,
                                  const LstmTrace<float>&, MatrixF, ModelParams<float>&);
template void LstmBackward<double>(const ModelParams<double>&, Eigen::Ref<const MatrixD>,
                                   const LstmTrace<double>&, MatrixD, ModelParams<double>&);

}  // namespace actrain
