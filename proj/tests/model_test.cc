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

#include "actrain/model.h"
#include "test_util.h"

namespace actrain {
namespace {

double Sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// One layer, H = 1, d = 1, hand-picked weights; the cell is stepped by hand.
TEST(Lstm, ScalarHandCase) {
  ModelParams<double> p;
  LstmLayer<double> layer;
  layer.w_input = MatrixD(4, 1);
  layer.w_input << 0.5, -0.3, 0.8, 0.1;
  layer.w_recurrent = MatrixD(4, 1);
  layer.w_recurrent << 0.2, 0.4, -0.6, 0.7;
  layer.bias = MatrixD(4, 1);
  layer.bias << 0.1, 1.0, 0.0, -0.2;
  p.lstm.push_back(layer);
  MatrixD x(3, 1);
  x << 1.0, -2.0, 0.5;

  const LstmTrace<double> trace = LstmForward<double>(p, x);
  double h = 0, c = 0;
  for (int t = 0; t < 3; ++t) {
    const double a_i = 0.5 * x(t) + 0.2 * h + 0.1;
    const double a_f = -0.3 * x(t) + 0.4 * h + 1.0;
    const double a_g = 0.8 * x(t) - 0.6 * h + 0.0;
    const double a_o = 0.1 * x(t) + 0.7 * h - 0.2;
    c = Sig(a_f) * c + Sig(a_i) * std::tanh(a_g);
    h = Sig(a_o) * std::tanh(c);
    EXPECT_NEAR(trace.cells[0](t, 0), c, 1e-15) << "t=" << t;
    EXPECT_NEAR(trace.hidden[0](t, 0), h, 1e-15) << "t=" << t;
    EXPECT_NEAR(trace.gates[0](t, 1), Sig(a_f), 1e-15);
  }
}

TEST(Lstm, IsCausal) {
  Rng rng(1);
  const FeatureDataset data = testing::RandomDataset(rng, 1, 4, 20, 20);
  const LatentConfig config = testing::TinyConfig(4, 5, 8, 3);
  const ModelParams<double> p = testing::TinyModel(config, Variant::kCotrainExact, data, rng);
  MatrixD x = data[0].frames.cast<double>();
  const auto before = LstmForward<double>(p, x);
  for (const int t_change : {0, 7, 19}) {
    MatrixD y = x;
    y.row(t_change).setConstant(3.0);
    const auto after = LstmForward<double>(p, y);
    for (int l = 0; l < 3; ++l) {
      EXPECT_TRUE(after.hidden[l].topRows(t_change) == before.hidden[l].topRows(t_change));
      EXPECT_NE(after.hidden[l].row(t_change), before.hidden[l].row(t_change));
    }
  }
}

TEST(Lstm, BackwardMatchesFiniteDifferences) {
  Rng rng(2);
  const FeatureDataset data = testing::RandomDataset(rng, 1, 3, 9, 9);
  const LatentConfig config = testing::TinyConfig(3, 4, 5, 2);
  ModelParams<double> p = testing::TinyModel(config, Variant::kApc, data, rng);
  const MatrixD x = data[0].frames.cast<double>();
  MatrixD weights(9, 5);
  for (Eigen::Index i = 0; i < weights.size(); ++i) weights.data()[i] = rng.Normal();
  const auto loss = [&] {
    return LstmForward<double>(p, x).hidden.back().cwiseProduct(weights).sum();
  };
  ModelParams<double> grads = p.ZerosLike();
  const auto trace = LstmForward<double>(p, x);
  LstmBackward<double>(p, x, trace, weights, grads);
  std::vector<GradCheckBlock> blocks;
  auto values = p.Blocks();
  const auto g = std::as_const(grads).Blocks();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].first.rfind("lstm", 0) == 0) blocks.push_back({values[i].first, values[i].second, g[i].second});
  }
  const auto report = GradCheck(loss, blocks, 1e-5, rng);
  EXPECT_LT(report.MaxRelError(), 1e-5);
}

TEST(Distributions, PredictorIsSoftmaxOfProjection) {
  MatrixD u(2, 3);
  u << 1, 0, -1, 0.5, 2, 0;
  VectorD h(2);
  h << 2.0, -1.0;
  const auto dist = PredictorDistribution<double>(h, u);
  const double l0 = 2 * 1 - 0.5, l1 = 0 - 2, l2 = -2;
  const double z = std::exp(l0) + std::exp(l1) + std::exp(l2);
  EXPECT_NEAR(dist.probs(0), std::exp(l0) / z, 1e-15);
  EXPECT_NEAR(dist.log_probs(2), l2 - std::log(z), 1e-14);
}

TEST(Distributions, ConfirmationPrefersNearestCodeword) {
  MatrixD v(3, 2);
  v << 0, 0, 1, 0, 5, 5;
  VectorD x(2);
  x << 0.9, 0.1;
  const auto q = ConfirmationDistribution<double>(x, v);
  // logits -||x - v||^2 = -0.82, -0.02, -33.62
  const double z = std::exp(-0.82) + std::exp(-0.02) + std::exp(-33.62);
  EXPECT_NEAR(q.probs(1), std::exp(-0.02) / z, 1e-12);
  EXPECT_EQ(ArgMax(q.probs), 1);
  const auto sharp = ConfirmationDistribution<double>(x, v, 1e4);
  EXPECT_NEAR(sharp.probs(1), 1.0, 1e-12);
}

TEST(Distributions, GenerationDensityIsUnitGaussian) {
  MatrixD v(2, 3);
  v << 0, 0, 0, 1, 2, 3;
  VectorD x(3);
  x << 1, 1, 1;
  const double c = -1.5 * std::log(2 * std::numbers::pi);
  EXPECT_NEAR(GenerationLogDensity<double>(x, 0, v), c - 1.5, 1e-14);
  EXPECT_NEAR(GenerationLogDensity<double>(x, 1, v), c - 2.5, 1e-14);
  const VectorD all = GenerationLogDensities<double>(x, v);
  EXPECT_NEAR(all(1), c - 2.5, 1e-14);
  EXPECT_THROW(GenerationLogDensity<double>(x, 2, v), std::out_of_range);

  MatrixD w(3, 3);
  w.setIdentity();
  w *= 2.0;
  EXPECT_NEAR(GenerationLogDensity<double>(x, 1, v, &w), c - 0.5 * (1 + 9 + 25), 1e-12);
}

TEST(Distributions, PosteriorAndMarginalByEnumeration) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.UniformInt(10)), d = 3;
    MatrixD v(n, d);
    VectorD logits(n), x(d);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = rng.Normal();
    for (int j = 0; j < n; ++j) logits(j) = rng.Normal();
    for (int j = 0; j < d; ++j) x(j) = rng.Normal();
    const auto prior = CodeDistribution<double>::FromLogits(logits);
    double marginal = 0;
    std::vector<double> joint(n);
    for (int z = 0; z < n; ++z) {
      const double sq = (x - v.row(z).transpose()).squaredNorm();
      joint[z] = prior.probs(z) * std::pow(2 * std::numbers::pi, -d / 2.0) * std::exp(-0.5 * sq);
      marginal += joint[z];
    }
    EXPECT_NEAR(MarginalLogLikelihood<double>(x, prior, v), std::log(marginal), 1e-12);
    const auto post = PosteriorDistribution<double>(x, prior, v);
    for (int z = 0; z < n; ++z) EXPECT_NEAR(post.probs(z), joint[z] / marginal, 1e-12);
  }
}

TEST(Init, ShapesPerVariant) {
  Rng rng(4);
  const FeatureDataset data = testing::RandomDataset(rng, 3, 4, 10, 10);
  LatentConfig c = testing::TinyConfig(4, 6, 7, 2);
  const auto exact = InitModel(c, Variant::kCotrainExact, data, rng);
  EXPECT_EQ(exact.lstm[0].w_input.rows(), 28);
  EXPECT_EQ(exact.lstm[0].w_input.cols(), 4);
  EXPECT_EQ(exact.lstm[1].w_input.cols(), 7);
  EXPECT_EQ(exact.code_projection.rows(), 7);
  EXPECT_EQ(exact.code_projection.cols(), 6);
  EXPECT_EQ(exact.codebook.rows(), 6);
  EXPECT_EQ(exact.codebook.cols(), 4);
  EXPECT_EQ(exact.codeword_projection.size(), 0);
  // Forget-gate bias starts at 1, the rest at 0.
  EXPECT_EQ(exact.lstm[0].bias.middleRows(7, 7), MatrixF::Ones(7, 1));
  EXPECT_EQ(exact.lstm[0].bias.topRows(7), MatrixF::Zero(7, 1));
  const float bound = 1.0f / std::sqrt(7.0f);
  EXPECT_LE(exact.lstm[0].w_recurrent.cwiseAbs().maxCoeff(), bound);

  c.codeword_dim = 3;
  const auto vq = InitModel(c, Variant::kVqApc, data, rng);
  EXPECT_EQ(vq.codebook.cols(), 3);
  EXPECT_EQ(vq.codeword_projection.rows(), 4);
  EXPECT_EQ(vq.codeword_projection.cols(), 3);
  const auto apc = InitModel(c, Variant::kApc, data, rng);
  EXPECT_EQ(apc.apc_head.rows(), 4);
  EXPECT_EQ(apc.apc_head.cols(), 7);
  EXPECT_EQ(apc.codebook.size(), 0);
}

TEST(Init, CodewordsAreDistinctTrainingFrames) {
  Rng rng(5);
  const FeatureDataset data = testing::RandomDataset(rng, 4, 3, 6, 12);
  for (const auto init : {CodebookInit::kUniformFrames, CodebookInit::kSpreadFrames}) {
    LatentConfig c = testing::TinyConfig(3, 10, 4, 1);
    c.codebook_init = init;
    const auto p = InitModel(c, Variant::kCotrainExact, data, rng);
    std::set<std::vector<float>> rows;
    for (Eigen::Index j = 0; j < p.codebook.rows(); ++j) {
      bool found = false;
      for (const auto& seq : data) {
        for (Eigen::Index t = 0; t < seq.frames.rows(); ++t) found |= seq.frames.row(t) == p.codebook.row(j);
      }
      EXPECT_TRUE(found) << CodebookInitName(init) << " row " << j;
      rows.insert(std::vector<float>(p.codebook.row(j).begin(), p.codebook.row(j).end()));
    }
    EXPECT_EQ(rows.size(), 10u);
  }
}

TEST(Init, DeterministicForSeed) {
  Rng a(6), b(6);
  Rng data_rng(7);
  const FeatureDataset data = testing::RandomDataset(data_rng, 2, 3, 8, 8);
  const LatentConfig c = testing::TinyConfig(3, 4, 5, 2);
  const auto p = InitModel(c, Variant::kCotrainGumbel, data, a);
  const auto q = InitModel(c, Variant::kCotrainGumbel, data, b);
  const auto pb = p.Blocks();
  const auto qb = q.Blocks();
  for (std::size_t i = 0; i < pb.size(); ++i) EXPECT_TRUE(*pb[i].second == *qb[i].second);
}

TEST(Config, ValidationAndNames) {
  LatentConfig c = testing::TinyConfig();
  c.codeword_dim = 3;
  EXPECT_THROW(c.Validate(Variant::kCotrainExact), std::invalid_argument);
  EXPECT_NO_THROW(c.Validate(Variant::kVqApc));
  c.shift = 0;
  EXPECT_THROW(c.Validate(Variant::kVqApc), std::invalid_argument);
  for (const auto v : {Variant::kCotrainExact, Variant::kCotrainGumbel, Variant::kHubertLike,
                       Variant::kVqApc, Variant::kApc}) {
    EXPECT_EQ(ParseVariant(VariantName(v)), v);
  }
  EXPECT_THROW(ParseVariant("bogus"), std::invalid_argument);
  EXPECT_FALSE(IsTrainable(Variant::kHubertLike, "codebook"));
  EXPECT_TRUE(IsTrainable(Variant::kCotrainExact, "codebook"));
}

}  // namespace
}  // namespace actrain
