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

#include "actrain/eval.h"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "actrain/binary_io.h"
#include "actrain/training.h"

namespace actrain {
namespace {

std::string FormatDouble(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::ofstream OpenCsv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void CheckLabels(const FeatureDataset& data, const Labels& labels, int num_phones,
                 const char* what) {
  if (labels.size() != data.size()) {
    throw std::invalid_argument(std::string(what) + ": " + std::to_string(labels.size()) +
                                " label sequences for " + std::to_string(data.size()) +
                                " utterances");
  }
  for (std::size_t u = 0; u < data.size(); ++u) {
    if (static_cast<Eigen::Index>(labels[u].size()) != data[u].frames.rows()) {
      throw std::invalid_argument(std::string(what) + ": length mismatch for utterance " +
                                  data[u].utterance_id);
    }
    for (const int l : labels[u]) {
      if (l < 0 || l >= num_phones) {
        throw std::out_of_range(std::string(what) + ": label " + std::to_string(l) +
                                " outside [0, " + std::to_string(num_phones) + ") in " +
                                data[u].utterance_id);
      }
    }
  }
}

std::vector<MatrixF> AllHidden(const ModelParams<float>& params, const FeatureDataset& data,
                               int layer) {
  std::vector<MatrixF> out;
  out.reserve(data.size());
  for (const auto& seq : data) out.push_back(HiddenStates(params, seq.frames, layer));
  return out;
}

}  // namespace

Labels AlignLabels(const FeatureDataset& data, const Alignments& alignments, int num_phones) {
  Labels out;
  out.reserve(data.size());
  for (const auto& seq : data) {
    const auto it = alignments.find(seq.utterance_id);
    if (it == alignments.end()) {
      throw std::invalid_argument("no alignment for utterance " + seq.utterance_id);
    }
    out.push_back(it->second);
  }
  CheckLabels(data, out, num_phones, "align");
  return out;
}

MatrixF HiddenStates(const ModelParams<float>& params, const MatrixF& frames, int layer) {
  if (layer < 1 || layer > params.num_layers()) {
    throw std::out_of_range("layer " + std::to_string(layer) + " outside [1, " +
                            std::to_string(params.num_layers()) + "]");
  }
  LstmTrace<float> trace = LstmForward<float>(params, frames);
  return std::move(trace.hidden[layer - 1]);
}

ProbeResult ProbeTrain(const ModelParams<float>& backbone, int layer,
                       const FeatureDataset& train, const Labels& train_labels,
                       const FeatureDataset& eval, const Labels& eval_labels, int num_phones,
                       const ProbeConfig& config) {
  if (num_phones < 1) throw std::invalid_argument("probe: need at least one phone");
  if (train.empty() || eval.empty()) throw std::invalid_argument("probe: empty split");
  if (!(config.lr > 0) || config.epochs < 0 || config.batch_size < 1) {
    throw std::invalid_argument("probe: bad optimizer settings");
  }
  CheckLabels(train, train_labels, num_phones, "probe train split");
  CheckLabels(eval, eval_labels, num_phones, "probe eval split");

  const std::vector<MatrixF> train_h = AllHidden(backbone, train, layer);
  const Eigen::Index H = train_h.front().cols();
  const int P = num_phones;

  VectorD counts = VectorD::Ones(P);
  for (const auto& seq : train_labels) {
    for (const int l : seq) counts(l) += 1.0;
  }
  MatrixF weight = MatrixF::Zero(P, H);
  MatrixF bias = (counts / counts.sum()).array().log().cast<float>().matrix();  // P x 1

  AdamState<float> adam;
  Rng rng(config.seed, 3);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& plan : MakeBatches(train.size(), config.batch_size, rng)) {
      Eigen::Index n = 0;
      for (const auto u : plan) n += train_h[u].rows();
      if (n == 0) continue;
      MatrixF d_weight = MatrixF::Zero(P, H);
      MatrixF d_bias = MatrixF::Zero(P, 1);
      const float scale = 1.0f / static_cast<float>(n);
      for (const auto u : plan) {
        const MatrixF& h = train_h[u];
        MatrixF g = (h * weight.transpose()).rowwise() + bias.col(0).transpose();  // T x P
        for (Eigen::Index t = 0; t < g.rows(); ++t) {
          const VectorF p = Softmax(VectorF(g.row(t).transpose()));
          g.row(t) = p.transpose();
          g(t, train_labels[u][t]) -= 1.0f;
        }
        g *= scale;
        d_weight.noalias() += g.transpose() * h;
        d_bias.col(0) += g.colwise().sum().transpose();
      }
      AdamStep<float>({{"probe.weight", &weight}, {"probe.bias", &bias}}, {&d_weight, &d_bias},
                      adam, config.lr);
    }
  }

  ProbeResult result;
  result.layer = layer;
  result.confusion = CountMatrix::Zero(P, P);
  for (std::size_t u = 0; u < eval.size(); ++u) {
    const MatrixF h = HiddenStates(backbone, eval[u].frames, layer);
    const MatrixF g = (h * weight.transpose()).rowwise() + bias.col(0).transpose();
    for (Eigen::Index t = 0; t < g.rows(); ++t) {
      const auto pred = ArgMax(VectorF(g.row(t).transpose()));
      ++result.confusion(eval_labels[u][t], pred);
      ++result.frames;
    }
  }
  if (result.frames == 0) throw std::invalid_argument("probe: evaluation split has no frames");
  result.per = 1.0 - static_cast<double>(result.confusion.trace()) /
                         static_cast<double>(result.frames);
  return result;
}

CodeSource ParseCodeSource(std::string_view name) {
  if (name == "predictor") return CodeSource::kPredictor;
  if (name == "confirmer") return CodeSource::kConfirmer;
  throw std::invalid_argument("unknown code source '" + std::string(name) +
                              "' (expected predictor or confirmer)");
}

std::vector<std::vector<int>> ExtractCodes(const ModelParams<float>& params,
                                           const FeatureDataset& data, int shift,
                                           CodeSource source) {
  if (params.codebook.size() == 0 || params.code_projection.size() == 0) {
    throw std::invalid_argument("codes: model has no codebook");
  }
  if (shift < 1) throw std::invalid_argument("codes: shift must be >= 1");
  std::vector<std::vector<int>> out;
  out.reserve(data.size());
  for (const auto& seq : data) {
    const Eigen::Index len = seq.frames.rows();
    std::vector<int> codes;
    if (len > shift) {
      codes.resize(len - shift);
      if (source == CodeSource::kPredictor) {
        const LstmTrace<float> trace = LstmForward<float>(params, seq.frames);
        const MatrixF scores = trace.hidden.back() * params.code_projection;  // T x N
        for (Eigen::Index t = 0; t + shift < len; ++t) {
          codes[t] = static_cast<int>(ArgMax(VectorF(scores.row(t).transpose())));
        }
      } else {
        for (Eigen::Index t = 0; t + shift < len; ++t) {
          const VectorF x = seq.frames.row(t + shift).transpose();
          codes[t] = static_cast<int>(ArgMin(CodewordSqDistances<float>(x, params.codebook)));
        }
      }
    }
    out.push_back(std::move(codes));
  }
  return out;
}

CodePhoneMatrix CountCodePhones(const std::vector<std::vector<int>>& codes, const Labels& labels,
                                int shift, int num_phones, int num_codes) {
  if (codes.size() != labels.size()) throw std::invalid_argument("code/label count mismatch");
  CountMatrix counts = CountMatrix::Zero(num_phones, num_codes);
  CodePhoneMatrix m;
  m.occupancy.assign(num_codes, 0);
  for (std::size_t u = 0; u < codes.size(); ++u) {
    for (std::size_t t = 0; t < codes[u].size(); ++t) {
      const int z = codes[u][t];
      if (t + shift >= labels[u].size()) throw std::invalid_argument("codes run past labels");
      const int p = labels[u][t + shift];
      if (z < 0 || z >= num_codes || p < 0 || p >= num_phones) {
        throw std::out_of_range("code or label out of range");
      }
      ++counts(p, z);
      ++m.occupancy[z];
      ++m.total;
    }
  }
  m.probs = MatrixD::Zero(num_phones, num_codes);
  for (int z = 0; z < num_codes; ++z) {
    if (m.occupancy[z] > 0) {
      m.probs.col(z) = counts.col(z).cast<double>() / static_cast<double>(m.occupancy[z]);
    }
  }
  return m;
}

CodePhoneMatrix ComputeCodePhoneMatrix(const ModelParams<float>& params,
                                       const FeatureDataset& data, const Labels& labels,
                                       int shift, int num_phones, CodeSource source) {
  CheckLabels(data, labels, num_phones, "codes");
  return CountCodePhones(ExtractCodes(params, data, shift, source), labels, shift, num_phones,
                         static_cast<int>(params.codebook.rows()));
}

double Purity(const CodePhoneMatrix& matrix) {
  if (matrix.total <= 0) throw std::invalid_argument("purity: zero total occupancy");
  double sum = 0.0;
  for (Eigen::Index z = 0; z < matrix.probs.cols(); ++z) {
    if (matrix.occupancy[z] > 0) {
      sum += static_cast<double>(matrix.occupancy[z]) * matrix.probs.col(z).maxCoeff();
    }
  }
  return sum / static_cast<double>(matrix.total);
}

std::string Sha256Hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

std::string FileSha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return Sha256Hex(buf.str());
}

std::string ParamsDigest(const ModelParams<float>& params) {
  std::ostringstream out(std::ios::binary);
  for (const auto& [name, m] : params.Blocks()) {
    binary::PutString(out, name);
    binary::PutU32(out, static_cast<std::uint32_t>(m->rows()));
    binary::PutU32(out, static_cast<std::uint32_t>(m->cols()));
    for (Eigen::Index i = 0; i < m->size(); ++i) binary::PutF32(out, m->data()[i]);
  }
  return Sha256Hex(out.str());
}

void WriteProbeCsv(const std::filesystem::path& path, const std::vector<ProbeResult>& results) {
  std::ofstream out = OpenCsv(path);
  out << "layer,per,frames\n";
  for (const auto& r : results) out << r.layer << ',' << FormatDouble(r.per) << ',' << r.frames << '\n';
}

void WriteConfusionCsv(const std::filesystem::path& path, const CountMatrix& confusion,
                       const std::vector<std::string>& phones) {
  if (static_cast<Eigen::Index>(phones.size()) != confusion.rows()) {
    throw std::invalid_argument("confusion: phone names do not match matrix size");
  }
  std::ofstream out = OpenCsv(path);
  out << "reference";
  for (const auto& p : phones) out << ',' << p;
  out << '\n';
  for (Eigen::Index i = 0; i < confusion.rows(); ++i) {
    out << phones[i];
    for (Eigen::Index j = 0; j < confusion.cols(); ++j) out << ',' << confusion(i, j);
    out << '\n';
  }
}

void WriteCodePhoneCsv(const std::filesystem::path& path, const CodePhoneMatrix& matrix,
                       const std::vector<std::string>& phones) {
  if (static_cast<Eigen::Index>(phones.size()) != matrix.probs.rows()) {
    throw std::invalid_argument("code matrix: phone names do not match matrix size");
  }
  std::ofstream out = OpenCsv(path);
  out << "phone";
  for (Eigen::Index z = 0; z < matrix.probs.cols(); ++z) out << ",code" << z;
  out << '\n';
  for (Eigen::Index p = 0; p < matrix.probs.rows(); ++p) {
    out << phones[p];
    for (Eigen::Index z = 0; z < matrix.probs.cols(); ++z) out << ',' << FormatDouble(matrix.probs(p, z));
    out << '\n';
  }
  out << "occupancy";
  for (const auto c : matrix.occupancy) out << ',' << c;
  out << '\n';
}

}  // namespace actrain
