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

#include "actrain/kmeans.h"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace actrain {
namespace {

double SqDist(const MatrixF& frames, Eigen::Index i, const MatrixD& centroids, Eigen::Index j) {
  return (frames.row(i).cast<double>() - centroids.row(j)).squaredNorm();
}

}  // namespace

MatrixD KmeansPlusPlusInit(const MatrixF& frames, int num_clusters, Rng& rng) {
  const Eigen::Index M = frames.rows();
  if (num_clusters < 1) throw std::invalid_argument("kmeans++: need at least one cluster");
  if (M < num_clusters) {
    throw std::invalid_argument("kmeans++: " + std::to_string(M) + " frames < " +
                                std::to_string(num_clusters) + " clusters");
  }
  MatrixD centroids(num_clusters, frames.cols());
  centroids.row(0) = frames.row(static_cast<Eigen::Index>(rng.UniformInt(M))).cast<double>();
  std::vector<double> d2(M);
  for (Eigen::Index i = 0; i < M; ++i) d2[i] = SqDist(frames, i, centroids, 0);

  for (int c = 1; c < num_clusters; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    Eigen::Index pick = M - 1;
    if (total > 0.0) {
      const double target = rng.Uniform() * total;
      double running = 0.0;
      for (Eigen::Index i = 0; i < M; ++i) {
        running += d2[i];
        if (target < running && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
      // Rounding can leave target >= running; take the last positive-mass frame.
      if (!(d2[pick] > 0.0)) {
        while (pick > 0 && !(d2[pick] > 0.0)) --pick;
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.UniformInt(M));
    }
    centroids.row(c) = frames.row(pick).cast<double>();
    for (Eigen::Index i = 0; i < M; ++i) d2[i] = std::min(d2[i], SqDist(frames, i, centroids, c));
  }
  return centroids;
}

std::vector<int> AssignNearest(const MatrixF& frames, const MatrixD& centroids,
                               double* objective) {
  if (frames.cols() != centroids.cols()) {
    throw std::invalid_argument("assign: frame dimension " + std::to_string(frames.cols()) +
                                " != centroid dimension " + std::to_string(centroids.cols()));
  }
  std::vector<int> out(frames.rows());
  double total = 0.0;
  for (Eigen::Index i = 0; i < frames.rows(); ++i) {
    const Eigen::RowVectorXd x = frames.row(i).cast<double>();
    double best = std::numeric_limits<double>::infinity();
    int best_j = 0;
    for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
      const double d = (x - centroids.row(j)).squaredNorm();
      if (d < best) {
        best = d;
        best_j = static_cast<int>(j);
      }
    }
    out[i] = best_j;
    total += best;
  }
  if (objective != nullptr) *objective = total;
  return out;
}

KmeansResult Lloyd(const MatrixF& frames, MatrixD init_centroids, int max_iters) {
  if (max_iters < 0) throw std::invalid_argument("lloyd: iteration count must be >= 0");
  if (frames.rows() < init_centroids.rows()) {
    throw std::invalid_argument("lloyd: fewer frames than clusters");
  }
  const Eigen::Index M = frames.rows();
  const Eigen::Index N = init_centroids.rows();
  KmeansResult result;
  result.centroids = std::move(init_centroids);
  double objective = 0.0;
  result.assignments = AssignNearest(frames, result.centroids, &objective);
  result.history.push_back(objective);

  for (int it = 0; it < max_iters; ++it) {
    MatrixD sums = MatrixD::Zero(N, frames.cols());
    std::vector<std::size_t> counts(N, 0);
    for (Eigen::Index i = 0; i < M; ++i) {
      sums.row(result.assignments[i]) += frames.row(i).cast<double>();
      ++counts[result.assignments[i]];
    }
    // Distance of every frame to its own centroid, for empty-cluster repair.
    std::vector<double> own(M);
    for (Eigen::Index i = 0; i < M; ++i) own[i] = SqDist(frames, i, result.centroids, result.assignments[i]);
    for (Eigen::Index j = 0; j < N; ++j) {
      if (counts[j] > 0) {
        result.centroids.row(j) = sums.row(j) / static_cast<double>(counts[j]);
      } else {
        const auto far = std::max_element(own.begin(), own.end()) - own.begin();
        result.centroids.row(j) = frames.row(far).cast<double>();
        own[far] = 0.0;
      }
    }
    std::vector<int> next = AssignNearest(frames, result.centroids, &objective);
    result.history.push_back(objective);
    ++result.iterations;
    const bool converged = next == result.assignments;
    result.assignments = std::move(next);
    if (converged) break;
  }
  result.objective = result.history.back();
  return result;
}

std::vector<std::vector<int>> AssignTargets(const FeatureDataset& dataset,
                                            const MatrixD& centroids) {
  std::vector<std::vector<int>> out;
  out.reserve(dataset.size());
  for (const auto& seq : dataset) out.push_back(AssignNearest(seq.frames, centroids));
  return out;
}

std::vector<std::size_t> SampleUtterances(std::size_t total, std::size_t count, Rng& rng) {
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (count >= total) return idx;
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + rng.UniformInt(total - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

MatrixF PoolFrames(const FeatureDataset& dataset, std::span<const std::size_t> utterances) {
  Eigen::Index rows = 0;
  Eigen::Index d = dataset.empty() ? 0 : dataset.front().frames.cols();
  for (const auto u : utterances) rows += dataset.at(u).frames.rows();
  MatrixF pooled(rows, d);
  Eigen::Index r = 0;
  for (const auto u : utterances) {
    const auto& f = dataset[u].frames;
    if (f.cols() != d) throw std::invalid_argument("pool: inconsistent frame dimension");
    pooled.middleRows(r, f.rows()) = f;
    r += f.rows();
  }
  return pooled;
}

}  // namespace actrain
