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


#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "actrain/numerics.h"

namespace actrain {
namespace {

// Reference SplitMix64 finalizer, written out from the published constants.
std::uint64_t RefMix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

TEST(Rng, MatchesCounterFormula) {
  constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ULL;
  const std::uint64_t seed = 42, stream = 7;
  const std::uint64_t key = RefMix(seed ^ RefMix(stream + golden));
  Rng rng(seed, stream);
  for (std::uint64_t i = 0; i < 16; ++i) EXPECT_EQ(rng.NextU64(), RefMix(key + golden * i));
}

TEST(Rng, SameSeedSameSequence) {
  Rng a(123, 4), b(123, 4), c(124, 4), d(123, 5);
  int diff_seed = 0, diff_stream = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.NextU64();
    EXPECT_EQ(x, b.NextU64());
    diff_seed += x != c.NextU64();
    diff_stream += x != d.NextU64();
  }
  EXPECT_EQ(diff_seed, 100);
  EXPECT_EQ(diff_stream, 100);
}

TEST(Rng, ResumesFromSavedState) {
  Rng a(9, 2);
  for (int i = 0; i < 37; ++i) a.Normal();
  Rng b = Rng::FromState(a.state());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(a.NextU64(), b.NextU64());
}

TEST(Rng, SplitDoesNotAdvanceParent) {
  Rng a(5), b(5);
  Rng child = a.Split(3);
  EXPECT_EQ(a.state(), b.state());
  EXPECT_NE(child.NextU64(), a.NextU64());
}

TEST(Rng, UniformMomentsAndRange) {
  Rng rng(1);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.UniformOpen();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 3e-3);
  EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12.0, 2e-3);
}

TEST(Rng, NormalMoments) {
  Rng rng(2);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.Normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 1e-2);
  EXPECT_NEAR(sq / n, 1.0, 1e-2);
}

TEST(Rng, UniformIntCoversRangeEvenly) {
  Rng rng(3);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.UniformInt(7)];
  for (const int c : counts) EXPECT_NEAR(c, 10000, 500);
  EXPECT_THROW(rng.UniformInt(0), std::invalid_argument);
}

TEST(Shuffle, IsAPermutation) {
  Rng rng(4);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  Shuffle(v.begin(), v.end(), rng);
  EXPECT_EQ(std::set<int>(v.begin(), v.end()).size(), 50u);
}

TEST(Gumbel, MeanIsEulerMascheroni) {
  Rng rng(5);
  const std::vector<double> g = GumbelNoise(rng, 1000000);
  double sum = 0;
  for (const double x : g) sum += x;
  EXPECT_NEAR(sum / g.size(), 0.5772156649, 0.01);
}

TEST(Gumbel, ClampKeepsValuesFinite) {
  EXPECT_TRUE(std::isfinite(GumbelFromUniform(0.0)));
  EXPECT_TRUE(std::isfinite(GumbelFromUniform(1.0)));
  EXPECT_NEAR(GumbelFromUniform(std::exp(-1.0)), 0.0, 1e-15);
}

TEST(Gumbel, ArgmaxSamplesFollowTargetProbabilities) {
  VectorD probs(4);
  probs << 0.1, 0.2, 0.3, 0.4;
  const VectorD logits = probs.array().log().matrix();
  Rng rng(6);
  std::vector<int> counts(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    VectorD noisy = logits;
    for (int j = 0; j < 4; ++j) noisy(j) += GumbelFromUniform(rng.UniformOpen());
    ++counts[ArgMax(Softmax(VectorD(noisy / 0.5)))];
  }
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(counts[j] / double(n), probs(j), 0.01);
}

TEST(Softmax, HandComputed) {
  VectorD v(3);
  v << 0.0, std::log(2.0), std::log(3.0);
  const VectorD p = Softmax(v);
  EXPECT_NEAR(p(0), 1.0 / 6, 1e-15);
  EXPECT_NEAR(p(1), 2.0 / 6, 1e-15);
  EXPECT_NEAR(p(2), 3.0 / 6, 1e-15);
  EXPECT_NEAR(LogSumExp(v), std::log(6.0), 1e-15);
  const VectorD lp = LogSoftmax(v);
  EXPECT_NEAR(lp(2), std::log(0.5), 1e-15);
}

TEST(Softmax, StableForLargeLogits) {
  VectorD v(2);
  v << 1000.0, 1000.0;
  EXPECT_NEAR(LogSumExp(v), 1000.0 + std::log(2.0), 1e-12);
  EXPECT_NEAR(Softmax(v)(0), 0.5, 1e-15);
  v << -1e308, 0.0;
  EXPECT_TRUE(AllFinite(LogSoftmax(v)));
}

TEST(Softmax, ShiftInvariance) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    VectorD v(6);
    for (int j = 0; j < 6; ++j) v(j) = 5 * rng.Normal();
    const double c = 10 * rng.Normal();
    const VectorD shifted = (v.array() + c).matrix();
    EXPECT_LT((Softmax(v) - Softmax(shifted)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(LogSumExp(shifted), LogSumExp(v) + c, 1e-10);
    EXPECT_NEAR(Softmax(v).sum(), 1.0, 1e-12);
  }
}

TEST(Entropy, UniformAndPointMass) {
  VectorD u = VectorD::Constant(8, 1.0 / 8);
  EXPECT_NEAR(Entropy(u), std::log(8.0), 1e-14);
  VectorD one_hot = VectorD::Zero(5);
  one_hot(2) = 1.0;
  EXPECT_EQ(Entropy(one_hot), 0.0);
  VectorD bad = VectorD::Zero(2);
  bad(0) = -0.1;
  EXPECT_THROW(Entropy(bad), std::invalid_argument);
}

TEST(Entropy, BoundedByLogSize) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    VectorD v(5);
    for (int j = 0; j < 5; ++j) v(j) = 3 * rng.Normal();
    const double h = Entropy(Softmax(v));
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log(5.0) + 1e-12);
  }
}

TEST(ArgMax, LowestIndexWinsTies) {
  VectorD v(4);
  v << 1.0, 3.0, 3.0, 2.0;
  EXPECT_EQ(ArgMax(v), 1);
  v << 1.0, 0.5, 0.5, 2.0;
  EXPECT_EQ(ArgMin(v), 1);
}

TEST(SqDistMatrix, HandCase) {
  MatrixD x(2, 2), v(2, 2);
  x << 0, 0, 1, 1;
  v << 0, 1, 2, 2;
  const MatrixD d = SqDistMatrix(x, v);
  EXPECT_EQ(d(0, 0), 1.0);
  EXPECT_EQ(d(0, 1), 8.0);
  EXPECT_EQ(d(1, 0), 1.0);
  EXPECT_EQ(d(1, 1), 2.0);
  EXPECT_THROW(SqDistMatrix(x, MatrixD(2, 3)), std::invalid_argument);
}

TEST(GradCheck, QuadraticPasses) {
  MatrixD w(2, 3);
  w << 1, -2, 0.5, 3, 0.1, -1;
  const MatrixD grad = 2.0 * w;
  const GradCheckBlock block{"w", &w, &grad};
  Rng rng(9);
  const auto report = GradCheck([&] { return w.squaredNorm(); }, {&block, 1}, 1e-5, rng);
  EXPECT_LT(report.MaxRelError(), 1e-8);
  EXPECT_TRUE(report.FailingBlocks(1e-4).empty());
  EXPECT_EQ(report.blocks[0].checked, 6u);
}

TEST(GradCheck, WrongGradientIsReported) {
  MatrixD w = MatrixD::Constant(2, 2, 1.5);
  const MatrixD grad = 3.0 * w;  // true gradient is 2w
  const GradCheckBlock block{"w", &w, &grad};
  Rng rng(10);
  const auto report = GradCheck([&] { return w.squaredNorm(); }, {&block, 1}, 1e-5, rng);
  EXPECT_NEAR(report.MaxRelError(), 1.0 / 3.0, 1e-6);
  EXPECT_EQ(report.FailingBlocks(1e-4), std::vector<std::string>{"w"});
  EXPECT_EQ(w(0, 0), 1.5);
}

}  // namespace
}  // namespace actrain
