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

#include "actrain/numerics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace actrain {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t Mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::NextU64() {
  const std::uint64_t key = Mix64(state_.seed ^ Mix64(state_.stream + kGolden));
  return Mix64(key + kGolden * (state_.counter++));
}

double Rng::Uniform() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

double Rng::UniformOpen() {
  // (k + 0.5) / 2^53 never hits 0 or 1.
  return (static_cast<double>(NextU64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t Rng::UniformInt(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::UniformInt: n must be > 0");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = NextU64();
  while (x >= limit) x = NextU64();
  return x % n;
}

double Rng::Normal() {
  const double u1 = UniformOpen();
  const double u2 = Uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::Split(std::uint64_t stream) const {
  return Rng(Mix64(state_.seed + state_.counter) ^ state_.stream,
             Mix64(stream + 1));
}

double GumbelFromUniform(double u) {
  u = std::clamp(u, 1e-12, 1.0 - 1e-12);
  return -std::log(-std::log(u));
}

std::vector<double> GumbelNoise(Rng& rng, std::size_t n) {
  std::vector<double> g(n);
  for (auto& gi : g) gi = GumbelFromUniform(rng.UniformOpen());
  return g;
}

double GradCheckReport::MaxRelError() const {
  double m = 0.0;
  for (const auto& b : blocks) m = std::max(m, b.max_rel_error);
  return m;
}

std::vector<std::string> GradCheckReport::FailingBlocks(double tolerance) const {
  std::vector<std::string> out;
  for (const auto& b : blocks) {
    if (!(b.max_rel_error < tolerance)) out.push_back(b.name);
  }
  return out;
}

GradCheckReport GradCheck(const std::function<double()>& loss,
                          std::span<const GradCheckBlock> blocks,
                          double epsilon, Rng& rng,
                          std::size_t coords_per_block) {
  GradCheckReport report;
  for (const auto& block : blocks) {
    MatrixD& value = *block.value;
    const MatrixD& grad = *block.grad;
    if (value.rows() != grad.rows() || value.cols() != grad.cols()) {
      throw std::invalid_argument("grad_check: gradient shape mismatch in block " +
                                  block.name);
    }
    const auto size = static_cast<std::size_t>(value.size());
    std::vector<std::size_t> coords(size);
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (size > coords_per_block) {
      Shuffle(coords.begin(), coords.end(), rng);
      coords.resize(coords_per_block);
      std::sort(coords.begin(), coords.end());
    }

    GradCheckReport::Entry entry;
    entry.name = block.name;
    for (const std::size_t c : coords) {
      double* x = value.data() + c;
      const double saved = *x;
      *x = saved + epsilon;
      const double plus = loss();
      *x = saved - epsilon;
      const double minus = loss();
      *x = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw std::runtime_error("grad_check: non-finite loss while probing block " +
                                 block.name);
      }
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double analytic = grad.data()[c];
      const double rel = std::abs(analytic - numeric) /
                         std::max({1e-4, std::abs(analytic), std::abs(numeric)});
      if (entry.checked == 0 || rel > entry.max_rel_error) {
        entry.max_rel_error = rel;
        entry.worst_row = static_cast<Eigen::Index>(c) / value.cols();
        entry.worst_col = static_cast<Eigen::Index>(c) % value.cols();
      }
      ++entry.checked;
    }
    report.blocks.push_back(std::move(entry));
  }
  return report;
}

}  // namespace actrain
