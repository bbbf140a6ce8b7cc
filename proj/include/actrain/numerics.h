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

#ifndef ACTRAIN_NUMERICS_H_
#define ACTRAIN_NUMERICS_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "Eigen/Dense"

namespace actrain {

// Row-major dense matrix. f32 for training, f64 for verification.
template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using MatrixF = Matrix<float>;
using MatrixD = Matrix<double>;
using VectorF = Vector<float>;
using VectorD = Vector<double>;

template <typename T>
inline constexpr T kLog2Pi = static_cast<T>(1.8378770664093454835606594728112);

// Counter-based generator: draw i of (seed, stream) is
// mix64(key + golden * i) with key = mix64(seed ^ mix64(stream + golden)),
// where mix64 is the SplitMix64 finalizer. The full state is
// (seed, stream, counter), so any draw sequence resumes from a saved state.
struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t counter = 0;
  bool operator==(const RngState&) const = default;
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : state_{seed, stream, 0} {}
  static Rng FromState(const RngState& state) {
    Rng r(state.seed, state.stream);
    r.state_ = state;
    return r;
  }

  std::uint64_t NextU64();
  // Uniform on [0, 1) with 53 bits of resolution.
  double Uniform();
  // Uniform on the open interval (0, 1).
  double UniformOpen();
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t UniformInt(std::uint64_t n);
  double Normal();

  // Independent stream for a worker; does not advance this generator.
  Rng Split(std::uint64_t stream) const;

  const RngState& state() const { return state_; }

 private:
  RngState state_;
};

// Fisher-Yates with Rng::UniformInt (std::shuffle is implementation-defined).
template <typename It>
void Shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = rng.UniformInt(i);
    std::iter_swap(first + (i - 1), first + j);
  }
}

template <typename Derived>
typename Derived::Scalar LogSumExp(const Eigen::MatrixBase<Derived>& v) {
  using T = typename Derived::Scalar;
  if (v.size() == 0) throw std::invalid_argument("logsumexp: empty input");
  const T m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

template <typename Derived>
Vector<typename Derived::Scalar> LogSoftmax(const Eigen::MatrixBase<Derived>& v) {
  using T = typename Derived::Scalar;
  const T lse = LogSumExp(v);
  Vector<T> out = v;
  out.array() -= lse;
  return out;
}

template <typename Derived>
Vector<typename Derived::Scalar> Softmax(const Eigen::MatrixBase<Derived>& v) {
  using T = typename Derived::Scalar;
  if (v.size() == 0) throw std::invalid_argument("softmax: empty input");
  const T m = v.maxCoeff();
  Vector<T> out = (v.array() - m).exp().matrix();
  out /= out.sum();
  return out;
}

// -sum p ln p with 0 ln 0 := 0, in nats.
template <typename Derived>
typename Derived::Scalar Entropy(const Eigen::MatrixBase<Derived>& p) {
  using T = typename Derived::Scalar;
  T h = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const T pi = p(i);
    if (pi < 0) throw std::invalid_argument("entropy: negative probability");
    if (pi > 0) h -= pi * std::log(pi);
  }
  return std::max<T>(h, 0);
}

// Entry (i, j) = ||x_i - v_j||^2.
template <typename T>
Matrix<T> SqDistMatrix(const Matrix<T>& x, const Matrix<T>& v) {
  if (x.cols() != v.cols()) {
    throw std::invalid_argument("sq_dist_matrix: dimension mismatch (" +
                                std::to_string(x.cols()) + " vs " +
                                std::to_string(v.cols()) + ")");
  }
  Matrix<T> d(x.rows(), v.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.rows(); ++j) {
      d(i, j) = (x.row(i) - v.row(j)).squaredNorm();
    }
  }
  return d;
}

// Lowest index wins ties.
template <typename Derived>
Eigen::Index ArgMax(const Eigen::MatrixBase<Derived>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

template <typename Derived>
Eigen::Index ArgMin(const Eigen::MatrixBase<Derived>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) < v(best)) best = i;
  }
  return best;
}

template <typename Derived>
bool AllFinite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

// g = -ln(-ln u) with u clamped to [1e-12, 1 - 1e-12].
double GumbelFromUniform(double u);
std::vector<double> GumbelNoise(Rng& rng, std::size_t n);

struct GradCheckBlock {
  std::string name;
  MatrixD* value = nullptr;   // perturbed in place, restored afterwards
  const MatrixD* grad = nullptr;
};

struct GradCheckReport {
  struct Entry {
    std::string name;
    double max_rel_error = 0.0;
    Eigen::Index worst_row = 0;
    Eigen::Index worst_col = 0;
    std::size_t checked = 0;
  };
  std::vector<Entry> blocks;

  double MaxRelError() const;
  std::vector<std::string> FailingBlocks(double tolerance) const;
};

// Central differences on up to `coords_per_block` random coordinates of
// each block. Relative error is |ga - gn| / max(1e-4, |ga|, |gn|); the floor
// keeps finite-difference roundoff on near-zero coordinates from dominating.
GradCheckReport GradCheck(const std::function<double()>& loss,
                          std::span<const GradCheckBlock> blocks,
                          double epsilon, Rng& rng,
                          std::size_t coords_per_block = 200);

}  // namespace actrain

#endif  // ACTRAIN_NUMERICS_H_
