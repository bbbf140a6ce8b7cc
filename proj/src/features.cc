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

#include "actrain/features.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "actrain/binary_io.h"

namespace actrain {
namespace fs = std::filesystem;

namespace {

std::ifstream OpenIn(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::ofstream OpenOut(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string ReadTag(std::istream& in, const char* what) {
  std::string tag(4, '\0');
  in.read(tag.data(), 4);
  if (in.gcount() != 4) throw std::runtime_error(std::string("truncated header: ") + what);
  return tag;
}

// Splits on the first tab; rejects lines without one.
std::pair<std::string, std::string> SplitTab(const std::string& line,
                                             const fs::path& path, int lineno) {
  const auto tab = line.find('\t');
  if (tab == std::string::npos || tab == 0) {
    throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                             ": expected <id><TAB><value>");
  }
  return {line.substr(0, tab), line.substr(tab + 1)};
}

template <typename Fn>
void ForEachLine(const fs::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fn(line, lineno);
  }
}

struct FftwPlan {
  FftwPlan(int n) : size(n) {
    in = static_cast<double*>(fftw_malloc(sizeof(double) * n));
    out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
    plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }
  ~FftwPlan() {
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;

  int size;
  double* in;
  fftw_complex* out;
  fftw_plan plan;
};

}  // namespace

WavData ReadWav(const fs::path& path) {
  auto in = OpenIn(path);
  using binary::GetLE;
  if (ReadTag(in, "RIFF") != "RIFF") throw std::runtime_error(path.string() + ": not a RIFF file");
  binary::GetU32(in, "RIFF size");
  if (ReadTag(in, "WAVE") != "WAVE") throw std::runtime_error(path.string() + ": not a WAVE file");

  bool have_fmt = false;
  WavData wav;
  int bits = 0;
  while (true) {
    std::string id;
    try {
      id = ReadTag(in, "chunk id");
    } catch (const std::runtime_error&) {
      throw std::runtime_error(path.string() + ": truncated header (no data chunk)");
    }
    const std::uint32_t size = binary::GetU32(in, "chunk size");
    if (id == "fmt ") {
      if (size < 16) throw std::runtime_error(path.string() + ": truncated fmt chunk");
      const auto format = GetLE<std::uint16_t>(in, "audio format");
      const auto channels = GetLE<std::uint16_t>(in, "channels");
      wav.sample_rate = static_cast<int>(binary::GetU32(in, "sample rate"));
      binary::GetU32(in, "byte rate");
      GetLE<std::uint16_t>(in, "block align");
      bits = GetLE<std::uint16_t>(in, "bits per sample");
      if (format != 1) throw std::runtime_error(path.string() + ": unsupported format (non-PCM)");
      if (channels != 1) {
        throw std::runtime_error(path.string() + ": unsupported channel count " +
                                 std::to_string(channels));
      }
      if (bits != 16) {
        throw std::runtime_error(path.string() + ": unsupported bit depth " +
                                 std::to_string(bits));
      }
      in.ignore(size - 16 + (size & 1));
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw std::runtime_error(path.string() + ": data chunk before fmt chunk");
      const std::size_t n = size / 2;
      wav.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto raw = GetLE<std::uint16_t>(in, "sample data");
        wav.samples[i] = static_cast<double>(static_cast<std::int16_t>(raw)) / 32768.0;
      }
      return wav;
    } else {
      in.ignore(size + (size & 1));
      if (!in) throw std::runtime_error(path.string() + ": truncated chunk " + id);
    }
  }
}

void WriteWav(const fs::path& path, std::span<const double> samples, int sample_rate) {
  auto out = OpenOut(path);
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  binary::PutU32(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  binary::PutU32(out, 16);
  binary::PutLE<std::uint16_t>(out, 1);
  binary::PutLE<std::uint16_t>(out, 1);
  binary::PutU32(out, static_cast<std::uint32_t>(sample_rate));
  binary::PutU32(out, static_cast<std::uint32_t>(sample_rate * 2));
  binary::PutLE<std::uint16_t>(out, 2);
  binary::PutLE<std::uint16_t>(out, 16);
  out.write("data", 4);
  binary::PutU32(out, data_bytes);
  for (const double s : samples) {
    const double scaled = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
    binary::PutLE(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
}

int NextPowerOfTwo(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MatrixD MelFilterbank(int sample_rate, int fft_size, int num_mels) {
  const int num_bins = fft_size / 2 + 1;
  const double mel_max = HzToMel(sample_rate / 2.0);
  std::vector<double> edges(num_mels + 2);
  for (int i = 0; i < num_mels + 2; ++i) {
    edges[i] = MelToHz(mel_max * i / (num_mels + 1));
  }
  MatrixD fb = MatrixD::Zero(num_mels, num_bins);
  for (int m = 0; m < num_mels; ++m) {
    const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < num_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / fft_size;
      if (f > lo && f <= center) {
        fb(m, k) = (f - lo) / (center - lo);
      } else if (f > center && f < hi) {
        fb(m, k) = (hi - f) / (hi - center);
      }
    }
  }
  return fb;
}

int NumFrames(std::size_t num_samples, int window, int hop) {
  if (num_samples < static_cast<std::size_t>(window)) return 0;
  return 1 + static_cast<int>((num_samples - window) / hop);
}

MatrixF LogMel(std::span<const double> samples, int sample_rate,
               const LogMelOptions& options) {
  if (sample_rate <= 0) throw std::invalid_argument("log_mel: invalid sample rate");
  const int window = static_cast<int>(std::lround(sample_rate * options.window_ms / 1000.0));
  const int hop = static_cast<int>(std::lround(sample_rate * options.hop_ms / 1000.0));
  if (window <= 0 || hop <= 0) throw std::invalid_argument("log_mel: window/hop must be positive");
  const int num_frames = NumFrames(samples.size(), window, hop);
  if (num_frames < 1) {
    throw std::invalid_argument("log_mel: signal of " + std::to_string(samples.size()) +
                                " samples is shorter than one window (" +
                                std::to_string(window) + ")");
  }

  std::vector<double> signal(samples.begin(), samples.end());
  if (options.preemphasis != 0.0) {
    for (std::size_t i = signal.size(); i-- > 1;) {
      signal[i] -= options.preemphasis * signal[i - 1];
    }
  }

  const int fft_size = NextPowerOfTwo(window);
  const int num_bins = fft_size / 2 + 1;
  const MatrixD fb = MelFilterbank(sample_rate, fft_size, options.num_mels);
  std::vector<double> hamming(window);
  for (int n = 0; n < window; ++n) {
    hamming[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (window - 1));
  }

  FftwPlan fft(fft_size);
  VectorD power(num_bins);
  MatrixF out(num_frames, options.num_mels);
  for (int t = 0; t < num_frames; ++t) {
    const double* frame = signal.data() + static_cast<std::size_t>(t) * hop;
    for (int n = 0; n < window; ++n) fft.in[n] = frame[n] * hamming[n];
    for (int n = window; n < fft_size; ++n) fft.in[n] = 0.0;
    fftw_execute(fft.plan);
    for (int k = 0; k < num_bins; ++k) {
      power(k) = fft.out[k][0] * fft.out[k][0] + fft.out[k][1] * fft.out[k][1];
    }
    const VectorD energy = fb * power;
    for (int m = 0; m < options.num_mels; ++m) {
      out(t, m) = static_cast<float>(std::log(std::max(energy(m), options.energy_floor)));
    }
  }
  return out;
}

NormStats ComputeNormStats(const FeatureDataset& dataset) {
  if (dataset.empty()) throw std::invalid_argument("compute_norm_stats: empty dataset");
  const Eigen::Index d = dataset.front().frames.cols();
  VectorD sum = VectorD::Zero(d);
  double count = 0.0;
  for (const auto& seq : dataset) {
    if (seq.frames.cols() != d) {
      throw std::invalid_argument("compute_norm_stats: inconsistent dimension in " +
                                  seq.utterance_id);
    }
    sum += seq.frames.cast<double>().colwise().sum().transpose();
    count += static_cast<double>(seq.frames.rows());
  }
  if (count == 0.0) throw std::invalid_argument("compute_norm_stats: no frames");
  NormStats stats;
  stats.mean = sum / count;
  VectorD sq = VectorD::Zero(d);
  for (const auto& seq : dataset) {
    const MatrixD centered = seq.frames.cast<double>().rowwise() - stats.mean.transpose();
    sq += centered.array().square().matrix().colwise().sum().transpose();
  }
  stats.std = (sq / count).array().sqrt().max(1e-8).matrix();
  return stats;
}

FeatureSequence Normalize(const FeatureSequence& seq, const NormStats& stats) {
  if (seq.frames.cols() != stats.mean.size() || stats.std.size() != stats.mean.size()) {
    throw std::invalid_argument("normalize: dimension mismatch for " + seq.utterance_id);
  }
  FeatureSequence out = seq;
  const MatrixD x = seq.frames.cast<double>();
  const MatrixD y = (x.rowwise() - stats.mean.transpose()).array().rowwise() /
                    stats.std.transpose().array();
  out.frames = y.cast<float>();
  return out;
}

void WriteFtr(const fs::path& path, const MatrixF& m) {
  auto out = OpenOut(path);
  out.write("FTR1", 4);
  binary::PutU32(out, static_cast<std::uint32_t>(m.rows()));
  binary::PutU32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) binary::PutF32(out, m.data()[i]);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

MatrixF ReadFtr(const fs::path& path) {
  auto in = OpenIn(path);
  std::string magic(4, '\0');
  in.read(magic.data(), 4);
  if (in.gcount() != 4 || magic != "FTR1") {
    throw std::runtime_error(path.string() + ": bad magic");
  }
  const std::uint32_t rows = binary::GetU32(in, "FTR1 rows");
  const std::uint32_t cols = binary::GetU32(in, "FTR1 cols");
  const auto expected = static_cast<std::uintmax_t>(rows) * cols * 4 + 12;
  const auto actual = fs::file_size(path);
  if (actual != expected) {
    throw std::runtime_error(path.string() + ": length mismatch (header says " +
                             std::to_string(expected) + " bytes, file has " +
                             std::to_string(actual) + ")");
  }
  MatrixF m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = binary::GetF32(in, "FTR1 data");
  return m;
}

void WriteNormStats(const fs::path& path, const NormStats& stats) {
  MatrixF m(2, stats.mean.size());
  m.row(0) = stats.mean.transpose().cast<float>();
  m.row(1) = stats.std.transpose().cast<float>();
  WriteFtr(path, m);
}

NormStats ReadNormStats(const fs::path& path) {
  const MatrixF m = ReadFtr(path);
  if (m.rows() != 2) throw std::runtime_error(path.string() + ": stats file must have 2 rows");
  NormStats stats;
  stats.mean = m.row(0).transpose().cast<double>();
  stats.std = m.row(1).transpose().cast<double>().array().max(1e-8).matrix();
  return stats;
}

Manifest ReadManifest(const fs::path& path) {
  Manifest manifest;
  ForEachLine(path, [&](const std::string& line, int lineno) {
    manifest.push_back(SplitTab(line, path, lineno));
  });
  return manifest;
}

void WriteManifest(const fs::path& path, const Manifest& manifest) {
  auto out = OpenOut(path);
  for (const auto& [id, rel] : manifest) out << id << '\t' << rel << '\n';
}

void ArchiveWrite(const FeatureDataset& dataset, const fs::path& dir) {
  fs::create_directories(dir);
  Manifest manifest;
  for (const auto& seq : dataset) {
    const std::string file = seq.utterance_id + ".ftr";
    WriteFtr(dir / file, seq.frames);
    manifest.emplace_back(seq.utterance_id, file);
  }
  WriteManifest(dir / "manifest.tsv", manifest);
}

FeatureDataset ArchiveRead(const fs::path& manifest_path) {
  const Manifest manifest = ReadManifest(manifest_path);
  const fs::path base = manifest_path.parent_path();
  FeatureDataset dataset;
  dataset.reserve(manifest.size());
  for (const auto& [id, rel] : manifest) {
    const fs::path p = base / rel;
    if (!fs::exists(p)) {
      throw std::runtime_error("utterance " + id + ": missing feature file " + p.string());
    }
    FeatureSequence seq;
    seq.utterance_id = id;
    try {
      seq.frames = ReadFtr(p);
    } catch (const std::exception& e) {
      throw std::runtime_error("utterance " + id + ": " + e.what());
    }
    if (!dataset.empty() && dataset.front().frames.cols() != seq.frames.cols()) {
      throw std::runtime_error("utterance " + id + ": feature dimension differs from " +
                               dataset.front().utterance_id);
    }
    dataset.push_back(std::move(seq));
  }
  return dataset;
}

Alignments ReadAlignments(const fs::path& path) {
  Alignments out;
  ForEachLine(path, [&](const std::string& line, int lineno) {
    auto [id, rest] = SplitTab(line, path, lineno);
    std::istringstream ss(rest);
    std::vector<int> labels;
    long long v;
    while (ss >> v) {
      if (v < 0 || v > std::numeric_limits<int>::max()) {
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                 ": label out of range");
      }
      labels.push_back(static_cast<int>(v));
    }
    if (!ss.eof()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": non-integer label");
    }
    out[id] = std::move(labels);
  });
  return out;
}

void WriteAlignments(const fs::path& path, const Alignments& alignments) {
  auto out = OpenOut(path);
  for (const auto& [id, labels] : alignments) {
    out << id << '\t';
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (i) out << ' ';
      out << labels[i];
    }
    out << '\n';
  }
}

std::vector<std::string> ReadPhoneInventory(const fs::path& path) {
  std::map<int, std::string> by_id;
  ForEachLine(path, [&](const std::string& line, int lineno) {
    auto [id, name] = SplitTab(line, path, lineno);
    by_id[std::stoi(id)] = name;
  });
  std::vector<std::string> names;
  for (const auto& [id, name] : by_id) {
    if (id != static_cast<int>(names.size())) {
      throw std::runtime_error(path.string() + ": phone ids must be 0..P-1 without gaps");
    }
    names.push_back(name);
  }
  return names;
}

void WritePhoneInventory(const fs::path& path, const std::vector<std::string>& names) {
  auto out = OpenOut(path);
  for (std::size_t i = 0; i < names.size(); ++i) out << i << '\t' << names[i] << '\n';
}

}  // namespace actrain
