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

#ifndef ACTRAIN_KMEANS_H_
#define ACTRAIN_KMEANS_H_

#include <span>
#include <vector>

#include "actrain/features.h"
#include "actrain/numerics.h"

namespace actrain {

struct KmeansResult {
  MatrixD centroids;             // N x d
  std::vector<int> assignments;  // per frame, exact argmin (lowest index on ties)
  double objective = 0.0;        // sum of squared distances to assigned centroid
  std::vector<double> history;   // objective after every assignment step
  int iterations = 0;            // centroid updates performed
};

// First centroid uniform over frames; each next one drawn with probability
// proportional to the squared distance to the nearest chosen centroid.
// Falls back to a uniform pick when every distance is zero.
MatrixD KmeansPlusPlusInit(const MatrixF& frames, int num_clusters, Rng& rng);

// Alternates nearest-centroid assignment and mean update, stopping early once
// assignments repeat. An empty cluster takes the frame farthest from its
// current centroid.
KmeansResult Lloyd(const MatrixF& frames, MatrixD init_centroids, int max_iters = 10);

std::vector<int> AssignNearest(const MatrixF& frames, const MatrixD& centroids,
                               double* objective = nullptr);

// Per-utterance nearest-centroid targets.
std::vector<std::vector<int>> AssignTargets(const FeatureDataset& dataset,
                                            const MatrixD& centroids);

// Uniform sample without replacement, returned in increasing order; all
// indices when count >= total.
std::vector<std::size_t> SampleUtterances(std::size_t total, std::size_t count, Rng& rng);

// Frames of the selected utterances stacked in order.
MatrixF PoolFrames(const FeatureDataset& dataset, std::span<const std::size_t> utterances);

}  // namespace actrain

#endif  // ACTRAIN_KMEANS_H_
