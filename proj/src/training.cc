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

#include "actrain/training.h"

#include <spdlog/spdlog.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "actrain/binary_io.h"

namespace actrain {
namespace {

constexpr char kMagic[4] = {'A', 'C', 'T', '1'};

// Shortest representation that parses back to the same double.
std::string FormatDouble(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double ParseDouble(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("config: bad number for " + key + ": '" + s + "'");
  }
  return v;
}

template <typename I>
I ParseInt(const std::string& key, const std::string& s) {
  I v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("config: bad integer for " + key + ": '" + s + "'");
  }
  return v;
}

bool ParseBool(const std::string& key, const std::string& s) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": '" + s + "'");
}

bool UsesGumbel(Variant v) { return v == Variant::kCotrainGumbel || v == Variant::kVqApc; }

void PutMatrix(std::ostream& out, const MatrixF& m) {
  binary::PutU32(out, static_cast<std::uint32_t>(m.rows()));
  binary::PutU32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) binary::PutF32(out, m.data()[i]);
}

MatrixF GetMatrix(std::istream& in, const char* what) {
  const auto rows = binary::GetU32(in, what);
  const auto cols = binary::GetU32(in, what);
  MatrixF m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = binary::GetF32(in, what);
  return m;
}

// Frame-weighted accumulation of per-batch breakdowns.
struct Accumulator {
  double objective = 0, ce = 0, recon = 0, entropy = 0;
  std::size_t frames = 0;

  void Add(const LossBreakdown& b) {
    const double n = static_cast<double>(b.frames);
    objective += b.per_frame_objective * n;
    ce += b.ce_term * n;
    recon += b.recon_term * n;
    entropy += b.entropy_term * n;
    frames += b.frames;
  }
  LossRecord Record(std::uint32_t epoch) const {
    const double n = static_cast<double>(frames);
    return {epoch, objective / n, ce / n, recon / n, entropy / n};
  }
};

std::vector<std::size_t> UsableUtterances(const FeatureDataset& data, int shift) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].frames.rows() > shift) out.push_back(i);
  }
  return out;
}

}  // namespace

void TrainConfig::Validate() const {
  model.Validate(variant);
  if (!(lr > 0)) throw std::invalid_argument("train config: lr must be > 0");
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
  if (epochs < 0) throw std::invalid_argument("train config: epochs must be >= 0");
  if (!(tau_end > 0) || !(tau_end <= tau_start)) {
    throw std::invalid_argument("train config: need 0 < tau_end <= tau_start");
  }
  if (!(tau_decay > 0) || tau_decay > 1) {
    throw std::invalid_argument("train config: tau_decay must be in (0, 1]");
  }
  if (clip_norm < 0) throw std::invalid_argument("train config: clip_norm must be >= 0");
  if (threads < 1) throw std::invalid_argument("train config: threads must be >= 1");
}

std::string TrainConfig::Serialize() const {
  std::ostringstream out;
  out << "variant=" << VariantName(variant) << '\n'
      << "codebook_size=" << model.codebook_size << '\n'
      << "shift=" << model.shift << '\n'
      << "frame_dim=" << model.frame_dim << '\n'
      << "hidden_dim=" << model.hidden_dim << '\n'
      << "num_layers=" << model.num_layers << '\n'
      << "codeword_dim=" << model.codeword_dim << '\n'
      << "codebook_init=" << CodebookInitName(model.codebook_init) << '\n'
      << "lr=" << FormatDouble(lr) << '\n'
      << "batch_size=" << batch_size << '\n'
      << "epochs=" << epochs << '\n'
      << "seed=" << seed << '\n'
      << "tau_start=" << FormatDouble(tau_start) << '\n'
      << "tau_end=" << FormatDouble(tau_end) << '\n'
      << "tau_decay=" << FormatDouble(tau_decay) << '\n'
      << "straight_through=" << (straight_through ? 1 : 0) << '\n'
      << "clip_norm=" << FormatDouble(clip_norm) << '\n'
      << "threads=" << threads << '\n';
  return out.str();
}

TrainConfig TrainConfig::Parse(const std::string& text) {
  TrainConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config: missing '=' in '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "variant") c.variant = ParseVariant(val);
    else if (key == "codebook_size") c.model.codebook_size = ParseInt<int>(key, val);
    else if (key == "shift") c.model.shift = ParseInt<int>(key, val);
    else if (key == "frame_dim") c.model.frame_dim = ParseInt<int>(key, val);
    else if (key == "hidden_dim") c.model.hidden_dim = ParseInt<int>(key, val);
    else if (key == "num_layers") c.model.num_layers = ParseInt<int>(key, val);
    else if (key == "codeword_dim") c.model.codeword_dim = ParseInt<int>(key, val);
    else if (key == "codebook_init") c.model.codebook_init = ParseCodebookInit(val);
    else if (key == "lr") c.lr = ParseDouble(key, val);
    else if (key == "batch_size") c.batch_size = ParseInt<int>(key, val);
    else if (key == "epochs") c.epochs = ParseInt<int>(key, val);
    else if (key == "seed") c.seed = ParseInt<std::uint64_t>(key, val);
    else if (key == "tau_start") c.tau_start = ParseDouble(key, val);
    else if (key == "tau_end") c.tau_end = ParseDouble(key, val);
    else if (key == "tau_decay") c.tau_decay = ParseDouble(key, val);
    else if (key == "straight_through") c.straight_through = ParseBool(key, val);
    else if (key == "clip_norm") c.clip_norm = ParseDouble(key, val);
    else if (key == "threads") c.threads = ParseInt<int>(key, val);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  return c;
}

double Temperature(std::uint64_t step, const TrainConfig& config) {
  const double tau = config.tau_start * std::pow(config.tau_decay, static_cast<double>(step));
  return std::max(config.tau_end, tau);
}

template <typename T>
void AdamStep(const NamedBlocks<T>& params, const std::vector<const Matrix<T>*>& grads,
              AdamState<T>& state, double lr) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam: params/grads count differ");
  if (state.names.empty() && state.step == 0) {
    for (const auto& [name, p] : params) {
      state.names.push_back(name);
      state.first.push_back(Matrix<T>::Zero(p->rows(), p->cols()));
      state.second.push_back(Matrix<T>::Zero(p->rows(), p->cols()));
    }
  }
  if (state.names.size() != params.size()) throw std::invalid_argument("adam: block count changed");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, p] = params[i];
    if (state.names[i] != name) {
      throw std::invalid_argument("adam: expected block " + state.names[i] + ", got " + name);
    }
    if (grads[i]->rows() != p->rows() || grads[i]->cols() != p->cols() ||
        state.first[i].rows() != p->rows() || state.first[i].cols() != p->cols()) {
      throw std::invalid_argument("adam: shape mismatch in block " + name);
    }
    if (!AllFinite(*grads[i])) throw std::runtime_error("adam: non-finite gradient in block " + name);
  }
  ++state.step;
  const double step = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, step);
  const double c2 = 1.0 - std::pow(state.beta2, step);
  const T b1 = static_cast<T>(state.beta1), b2 = static_cast<T>(state.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix<T>& g = *grads[i];
    state.first[i] = b1 * state.first[i] + (T(1) - b1) * g;
    state.second[i] = b2 * state.second[i] + (T(1) - b2) * g.cwiseProduct(g);
    const auto m_hat = state.first[i].array() / static_cast<T>(c1);
    const auto v_hat = state.second[i].array() / static_cast<T>(c2);
    params[i].second->array() -=
        static_cast<T>(lr) * m_hat / (v_hat.sqrt() + static_cast<T>(state.epsilon));
  }
}

template void AdamStep<float>(const NamedBlocks<float>&, const std::vector<const MatrixF*>&,
                              AdamState<float>&, double);
template void AdamStep<double>(const NamedBlocks<double>&, const std::vector<const MatrixD*>&,
                               AdamState<double>&, double);

std::vector<std::vector<std::size_t>> MakeBatches(std::size_t size, int batch_size, Rng& rng) {
  if (size == 0) throw std::invalid_argument("make_batches: empty dataset");
  if (batch_size < 1) throw std::invalid_argument("make_batches: batch_size must be >= 1");
  std::vector<std::size_t> order(size);
  for (std::size_t i = 0; i < size; ++i) order[i] = i;
  Shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  const auto bs = static_cast<std::size_t>(batch_size);
  for (std::size_t i = 0; i < size; i += bs) {
    batches.emplace_back(order.begin() + i, order.begin() + std::min(size, i + bs));
  }
  return batches;
}

std::string SerializeCheckpoint(const Checkpoint& ck) {
  std::ostringstream out(std::ios::binary);
  out.write(kMagic, 4);
  binary::PutU32(out, Checkpoint::kVersion);
  binary::PutString(out, ck.config.Serialize());
  const auto blocks = ck.params.Blocks();
  binary::PutU32(out, static_cast<std::uint32_t>(blocks.size()));
  for (const auto& [name, m] : blocks) {
    binary::PutString(out, name);
    PutMatrix(out, *m);
  }
  binary::PutU64(out, ck.adam.step);
  binary::PutF64(out, ck.adam.beta1);
  binary::PutF64(out, ck.adam.beta2);
  binary::PutF64(out, ck.adam.epsilon);
  binary::PutU32(out, static_cast<std::uint32_t>(ck.adam.names.size()));
  for (std::size_t i = 0; i < ck.adam.names.size(); ++i) {
    binary::PutString(out, ck.adam.names[i]);
    const MatrixF& m = ck.adam.first[i];
    const MatrixF& v = ck.adam.second[i];
    binary::PutU32(out, static_cast<std::uint32_t>(m.rows()));
    binary::PutU32(out, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.size(); ++j) binary::PutF32(out, m.data()[j]);
    for (Eigen::Index j = 0; j < v.size(); ++j) binary::PutF32(out, v.data()[j]);
  }
  binary::PutU64(out, ck.rng.seed);
  binary::PutU64(out, ck.rng.stream);
  binary::PutU64(out, ck.rng.counter);
  binary::PutU64(out, ck.epoch);
  binary::PutU64(out, ck.step);
  binary::PutU32(out, static_cast<std::uint32_t>(ck.history.size()));
  for (const auto& r : ck.history) {
    binary::PutU32(out, r.epoch);
    binary::PutF64(out, r.objective);
    binary::PutF64(out, r.ce);
    binary::PutF64(out, r.recon);
    binary::PutF64(out, r.entropy);
  }
  return out.str();
}

Checkpoint DeserializeCheckpoint(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, kMagic)) throw std::runtime_error("checkpoint: bad magic");
  const auto version = binary::GetU32(in, "checkpoint version");
  if (version != Checkpoint::kVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.config = TrainConfig::Parse(binary::GetString(in, "checkpoint config"));
  ck.params = ShapeModel(ck.config.model, ck.config.variant);

  std::map<std::string, MatrixF*> by_name;
  for (auto& [name, m] : ck.params.Blocks()) by_name[name] = m;
  const auto nblocks = binary::GetU32(in, "checkpoint block count");
  if (nblocks != by_name.size()) {
    throw std::runtime_error("checkpoint: expected " + std::to_string(by_name.size()) +
                             " parameter blocks, found " + std::to_string(nblocks));
  }
  for (std::uint32_t b = 0; b < nblocks; ++b) {
    const std::string name = binary::GetString(in, "checkpoint block name");
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw std::runtime_error("checkpoint: unexpected block " + name);
    MatrixF m = GetMatrix(in, "checkpoint block");
    if (m.rows() != it->second->rows() || m.cols() != it->second->cols()) {
      throw std::runtime_error("checkpoint: shape mismatch in block " + name);
    }
    *it->second = std::move(m);
  }
  ck.adam.step = binary::GetU64(in, "adam step");
  ck.adam.beta1 = binary::GetF64(in, "adam beta1");
  ck.adam.beta2 = binary::GetF64(in, "adam beta2");
  ck.adam.epsilon = binary::GetF64(in, "adam epsilon");
  const auto nmoments = binary::GetU32(in, "adam moment count");
  for (std::uint32_t b = 0; b < nmoments; ++b) {
    ck.adam.names.push_back(binary::GetString(in, "adam moment name"));
    const auto rows = binary::GetU32(in, "adam moment");
    const auto cols = binary::GetU32(in, "adam moment");
    MatrixF m(rows, cols), v(rows, cols);
    for (Eigen::Index j = 0; j < m.size(); ++j) m.data()[j] = binary::GetF32(in, "adam moment");
    for (Eigen::Index j = 0; j < v.size(); ++j) v.data()[j] = binary::GetF32(in, "adam moment");
    ck.adam.first.push_back(std::move(m));
    ck.adam.second.push_back(std::move(v));
  }
  ck.rng.seed = binary::GetU64(in, "rng state");
  ck.rng.stream = binary::GetU64(in, "rng state");
  ck.rng.counter = binary::GetU64(in, "rng state");
  ck.epoch = binary::GetU64(in, "epoch");
  ck.step = binary::GetU64(in, "step");
  const auto nhist = binary::GetU32(in, "history count");
  for (std::uint32_t i = 0; i < nhist; ++i) {
    LossRecord r;
    r.epoch = binary::GetU32(in, "history");
    r.objective = binary::GetF64(in, "history");
    r.ce = binary::GetF64(in, "history");
    r.recon = binary::GetF64(in, "history");
    r.entropy = binary::GetF64(in, "history");
    ck.history.push_back(r);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw std::runtime_error("checkpoint: trailing bytes");
  }
  return ck;
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const std::string bytes = SerializeCheckpoint(checkpoint);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return DeserializeCheckpoint(buf.str());
}

ModelParams<float> ShapeModel(const LatentConfig& config, Variant variant) {
  config.Validate(variant);
  ModelParams<float> p;
  const int H = config.hidden_dim;
  int in = config.frame_dim;
  for (int l = 0; l < config.num_layers; ++l) {
    p.lstm.push_back({MatrixF::Zero(4 * H, in), MatrixF::Zero(4 * H, H), MatrixF::Zero(4 * H, 1)});
    in = H;
  }
  if (variant == Variant::kApc) {
    p.apc_head = MatrixF::Zero(config.frame_dim, H);
    return p;
  }
  p.code_projection = MatrixF::Zero(H, config.codebook_size);
  p.codebook = MatrixF::Zero(config.codebook_size, config.codeword_dim);
  if (variant == Variant::kVqApc) {
    p.codeword_projection = MatrixF::Zero(config.frame_dim, config.codeword_dim);
  }
  return p;
}

LossRecord EvaluateObjective(const TrainConfig& config, const ModelParams<float>& params,
                             const FeatureDataset& data,
                             const std::vector<std::vector<int>>* /*targets*/) {
  const std::vector<std::size_t> usable = UsableUtterances(data, config.model.shift);
  if (usable.empty()) throw std::invalid_argument("evaluate: no utterance longer than the shift");
  LossOptions<float> options;
  options.shift = config.model.shift;
  options.threads = config.threads;
  Accumulator acc;
  const auto bs = static_cast<std::size_t>(config.batch_size);
  for (std::size_t i = 0; i < usable.size(); i += bs) {
    const std::span<const std::size_t> idx(usable.data() + i, std::min(bs, usable.size() - i));
    const Batch<float> batch = MakeBatch<float>(data, idx);
    switch (config.variant) {
      case Variant::kCotrainExact:
      case Variant::kCotrainGumbel:
      case Variant::kHubertLike:
        // The full co-training objective with softmax q; for HuBERT-like the
        // codebook is the clamped centroids.
        acc.Add(CotrainExactLoss<float>(batch, params, options, nullptr));
        break;
      case Variant::kVqApc: {
        LossBreakdown b;
        b.frames = CountValidFrames(batch, options.shift);
        b.per_frame_objective = MeanMarginalLogLikelihood<float>(batch, params, options.shift);
        b.recon_term = -b.per_frame_objective;
        acc.Add(b);
        break;
      }
      case Variant::kApc:
        acc.Add(ApcLoss<float>(batch, params, options, nullptr));
        break;
    }
  }
  return acc.Record(0);
}

Checkpoint Train(const TrainConfig& config, const FeatureDataset& data,
                 const HubertInputs* hubert, const std::optional<Checkpoint>& resume,
                 const TrainHooks& hooks) {
  config.Validate();
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  const bool is_hubert = config.variant == Variant::kHubertLike;
  if (is_hubert && hubert == nullptr) {
    throw std::invalid_argument("train: hubert-like training needs centroids and targets");
  }
  if (is_hubert && hubert->targets.size() != data.size()) {
    throw std::invalid_argument("train: " + std::to_string(hubert->targets.size()) +
                                " target sequences for " + std::to_string(data.size()) +
                                " utterances");
  }
  for (const auto& seq : data) {
    if (seq.frames.cols() != config.model.frame_dim) {
      throw std::invalid_argument("train: utterance " + seq.utterance_id + " has dimension " +
                                  std::to_string(seq.frames.cols()) + ", config says " +
                                  std::to_string(config.model.frame_dim));
    }
  }
  const std::vector<std::size_t> usable = UsableUtterances(data, config.model.shift);
  if (usable.size() < data.size()) {
    spdlog::warn("train: skipping {} utterance(s) with at most {} frames",
                 data.size() - usable.size(), config.model.shift);
  }
  if (usable.empty()) throw std::invalid_argument("train: no utterance longer than the shift");
  const std::vector<std::vector<int>>* targets = is_hubert ? &hubert->targets : nullptr;

  auto fail = [&](const Checkpoint& ck, const std::string& what) {
    if (!hooks.diagnostic_path.empty()) {
      SaveCheckpoint(hooks.diagnostic_path, ck);
      spdlog::error("train: diagnostic checkpoint written to {}", hooks.diagnostic_path.string());
    }
    throw std::runtime_error(what);
  };

  Checkpoint ck;
  if (resume.has_value()) {
    TrainConfig a = resume->config, b = config;
    a.epochs = b.epochs = 0;
    a.threads = b.threads = 1;
    if (!(a == b)) throw std::invalid_argument("train: resume config differs from checkpoint");
    ck = *resume;
    ck.config = config;
  } else {
    ck.config = config;
    Rng init_rng(config.seed, 1);
    ck.params = InitModel(config.model, config.variant, data, init_rng);
    if (is_hubert) {
      if (hubert->centroids.rows() != config.model.codebook_size ||
          hubert->centroids.cols() != config.model.frame_dim) {
        throw std::invalid_argument("train: centroids must be codebook_size x frame_dim");
      }
      ck.params.codebook = hubert->centroids.cast<float>();
    }
    ck.rng = Rng(config.seed, 2).state();
    LossRecord r = EvaluateObjective(config, ck.params, data, targets);
    r.epoch = 0;
    ck.history.push_back(r);
    if (hooks.on_epoch) hooks.on_epoch(ck);
  }

  LossOptions<float> options;
  options.shift = config.model.shift;
  options.threads = config.threads;
  options.gumbel.straight_through = config.straight_through;
  const int N = config.model.codebook_size;

  while (ck.epoch < static_cast<std::uint64_t>(config.epochs)) {
    Rng rng = Rng::FromState(ck.rng);
    for (const auto& plan : MakeBatches(usable.size(), config.batch_size, rng)) {
      std::vector<std::size_t> idx;
      for (const auto p : plan) idx.push_back(usable[p]);
      const Batch<float> batch = MakeBatch<float>(data, idx, targets);
      options.gumbel.temperature = Temperature(ck.step, config);
      std::vector<MatrixF> noise;
      if (UsesGumbel(config.variant)) {
        noise = DrawGumbelNoise(batch, N, rng);
        options.gumbel_noise = &noise;
      }
      ModelParams<float> grads = ck.params.ZerosLike();
      const LossBreakdown loss = EvaluateLoss(config.variant, batch, ck.params, options, &grads);
      if (!std::isfinite(loss.total)) {
        fail(ck, "train: non-finite loss at epoch " + std::to_string(ck.epoch + 1) + ", step " +
                     std::to_string(ck.step));
      }
      NamedBlocks<float> named;
      std::vector<MatrixF*> grad_mut;
      auto grad_blocks = grads.Blocks();
      auto param_blocks = ck.params.Blocks();
      for (std::size_t i = 0; i < param_blocks.size(); ++i) {
        if (!IsTrainable(config.variant, param_blocks[i].first)) continue;
        named.push_back(param_blocks[i]);
        grad_mut.push_back(grad_blocks[i].second);
      }
      if (config.clip_norm > 0) {
        double sq = 0;
        for (const auto* g : grad_mut) sq += g->cast<double>().squaredNorm();
        const double norm = std::sqrt(sq);
        if (norm > config.clip_norm) {
          const float s = static_cast<float>(config.clip_norm / norm);
          for (auto* g : grad_mut) *g *= s;
        }
      }
      const std::vector<const MatrixF*> grad_ptrs(grad_mut.begin(), grad_mut.end());
      try {
        AdamStep(named, grad_ptrs, ck.adam, config.lr);
      } catch (const std::runtime_error& e) {
        fail(ck, std::string("train: ") + e.what());
      }
      ++ck.step;
    }
    ck.rng = rng.state();
    ++ck.epoch;
    LossRecord r = EvaluateObjective(config, ck.params, data, targets);
    r.epoch = static_cast<std::uint32_t>(ck.epoch);
    ck.history.push_back(r);
    if (!std::isfinite(r.objective)) {
      fail(ck, "train: non-finite objective after epoch " + std::to_string(ck.epoch));
    }
    spdlog::info("epoch {} {} objective {:.6f}", ck.epoch, VariantName(config.variant),
                 r.objective);
    if (hooks.on_epoch) hooks.on_epoch(ck);
  }
  return ck;
}

void WriteLossLog(const std::filesystem::path& path, Variant variant,
                  const std::vector<LossRecord>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write loss log " + path.string());
  out << "epoch,variant,objective,ce,recon,entropy\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << VariantName(variant) << ',' << FormatDouble(r.objective) << ','
        << FormatDouble(r.ce) << ',' << FormatDouble(r.recon) << ',' << FormatDouble(r.entropy)
        << '\n';
  }
}

}  // namespace actrain
