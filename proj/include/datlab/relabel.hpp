// Copyright 2026 The datlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Relabeling pipelines: k-means over the embeddings of a standalone domain
// classifier (hard relabeling) and per-record soft labels from the same
// classifier.

#ifndef DATLAB_RELABEL_HPP_
#define DATLAB_RELABEL_HPP_

#include <cstdint>
#include <vector>

#include "datlab/common.hpp"
#include "datlab/datagen.hpp"
#include "datlab/nets.hpp"

namespace datlab::relabel {

// Penultimate-layer activations, row-aligned with the source dataset.
struct EmbeddingSet {
  Matrix points;                    // [m x e]
  std::vector<int> record_indices;  // identity mapping into the source
};

struct ClusterModel {
  Matrix centroids;  // [k x e]
  double inertia = 0.0;

  int k() const { return static_cast<int>(centroids.rows()); }
};

// Per-record soft domain labels; rows normalized.
struct SoftLabelSet {
  Matrix labels;  // [m x N]
};

// An independent domain classifier trained with plain SGD on cross-entropy
// against the dataset's hard domain labels. Not the DAT classifier.
nets::ModelParams train_standalone_classifier(const datagen::Dataset& dataset,
                                              const nets::MlpSpec& spec, int epochs,
                                              std::uint64_t seed, double alpha = 0.1,
                                              int batch_size = 64);

EmbeddingSet extract_embeddings(const nets::ModelParams& classifier,
                                const datagen::Dataset& dataset);

// k-means++ initialization, Lloyd iterations until the centroid shift drops
// below tol, empty clusters reseeded to the farthest point. Runs `restarts`
// seeded restarts and keeps the lowest-inertia model.
ClusterModel kmeans_fit(const Matrix& points, int k, std::uint64_t seed, int max_iters = 100,
                        double tol = 1e-6, int restarts = 10);

// Nearest-centroid index per row; ties break to the lowest centroid index.
std::vector<int> assign_clusters(const ClusterModel& model, const Matrix& points);

// Replaces each record's domain label with its nearest-centroid index.
// Features, task labels, and nativeness are untouched.
datagen::Dataset relabel_unsup(const datagen::Dataset& dataset, const ClusterModel& model,
                               const EmbeddingSet& embeddings);

// Softmax outputs of the classifier per record.
SoftLabelSet make_soft_labels(const nets::ModelParams& classifier,
                              const datagen::Dataset& dataset);

// Mean silhouette over points; 0 when k == 1 or a cluster is singleton.
double silhouette_score(const Matrix& points, const std::vector<int>& labels, int k);

std::vector<int> label_histogram(const std::vector<int>& labels, int k);

}  // namespace datlab::relabel

#endif  // DATLAB_RELABEL_HPP_
