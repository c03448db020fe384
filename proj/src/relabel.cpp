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

#include "datlab/relabel.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <numeric>

namespace datlab::relabel {

namespace {

std::vector<int> checked_domain_labels(const datagen::Dataset& dataset) {
  if (dataset.empty()) throw ValidationError("dataset is empty");
  std::vector<int> labels = dataset.domain_labels();
  for (int d : labels) {
    if (d < 0) throw ValidationError("dataset lacks hard domain labels (negative label found)");
  }
  return labels;
}

double squared_distance(const Matrix& points, Index row, const Matrix& centroids, Index c) {
  return (points.row(row) - centroids.row(c)).squaredNorm();
}

// Lloyd iterations from given initial centroids; inertia checked
// non-increasing across iterations.
ClusterModel lloyd(const Matrix& points, Matrix centroids, int max_iters, double tol) {
  const Index m = points.rows();
  const int k = static_cast<int>(centroids.rows());

  std::vector<int> assignment(static_cast<std::size_t>(m), 0);
  double prev_inertia = std::numeric_limits<double>::infinity();
  double inertia = prev_inertia;
  for (int iter = 0; iter < max_iters; ++iter) {
    // Assignment step; ties break to the lowest centroid index.
    inertia = 0.0;
    for (Index i = 0; i < m; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_c = 0;
      for (int c = 0; c < k; ++c) {
        const double dist = squared_distance(points, i, centroids, c);
        if (dist < best) {
          best = dist;
          best_c = c;
        }
      }
      assignment[static_cast<std::size_t>(i)] = best_c;
      inertia += best;
    }
    if (inertia > prev_inertia * (1.0 + 1e-12) + 1e-9) {
      throw std::logic_error("kmeans: inertia increased across iterations");
    }
    prev_inertia = inertia;

    // Update step.
    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < m; ++i) {
      sums.row(assignment[static_cast<std::size_t>(i)]) += points.row(i);
      ++counts[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])];
    }
    Matrix next(k, points.cols());
    bool reseeded = false;
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        next.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      } else {
        // Empty cluster: reseed to the point farthest from its centroid.
        Index farthest = 0;
        double far_dist = -1.0;
        for (Index i = 0; i < m; ++i) {
          const double dist =
              squared_distance(points, i, centroids, assignment[static_cast<std::size_t>(i)]);
          if (dist > far_dist) {
            far_dist = dist;
            farthest = i;
          }
        }
        next.row(c) = points.row(farthest);
        reseeded = true;
      }
    }
    const double shift = (next - centroids).rowwise().norm().maxCoeff();
    centroids = std::move(next);
    if (!reseeded && shift < tol) break;
  }

  // Final inertia under the final centroids.
  inertia = 0.0;
  for (Index i = 0; i < m; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) best = std::min(best, squared_distance(points, i, centroids, c));
    inertia += best;
  }
  return {std::move(centroids), inertia};
}

// k-means++ seeding: first centroid uniform, the rest sampled proportionally
// to the squared distance from the nearest chosen centroid.
Matrix kmeanspp_seeds(const Matrix& points, int k, Rng& rng) {
  const Index m = points.rows();
  Matrix centroids(k, points.cols());
  std::vector<double> min_dists(static_cast<std::size_t>(m),
                                std::numeric_limits<double>::infinity());
  centroids.row(0) = points.row(static_cast<Index>(rng.integer(static_cast<std::uint64_t>(m))));
  for (int c = 1; c < k; ++c) {
    for (Index i = 0; i < m; ++i) {
      min_dists[static_cast<std::size_t>(i)] = std::min(
          min_dists[static_cast<std::size_t>(i)], squared_distance(points, i, centroids, c - 1));
    }
    centroids.row(c) = points.row(static_cast<Index>(rng.discrete(min_dists)));
  }
  return centroids;
}

double subset_count(Index m, int k) {
  double count = 1.0;
  for (int i = 0; i < k; ++i) {
    count *= static_cast<double>(m - i) / static_cast<double>(i + 1);
    if (count > 1e9) return count;
  }
  return count;
}

}  // namespace

nets::ModelParams train_standalone_classifier(const datagen::Dataset& dataset,
                                              const nets::MlpSpec& spec, int epochs,
                                              std::uint64_t seed, double alpha, int batch_size) {
  spec.validate();
  if (epochs < 1) throw ValidationError("train_standalone_classifier: epochs must be positive");
  const std::vector<int> labels = checked_domain_labels(dataset);
  const int n_classes = spec.output_width();
  for (int d : labels) {
    if (d >= n_classes) {
      throw ValidationError("domain label " + std::to_string(d) + " outside classifier width " +
                            std::to_string(n_classes));
    }
  }
  const Matrix features = dataset.feature_matrix();

  nets::ModelParams params = nets::init_params(spec, seed);
  const auto nodes = params.all_nodes();
  Rng rng(mix_seed(seed, 1));
  std::vector<Index> order(dataset.size());
  std::iota(order.begin(), order.end(), Index{0});
  const Index m = static_cast<Index>(dataset.size());
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (Index start = 0; start < m; start += batch_size) {
      const Index count = std::min<Index>(batch_size, m - start);
      Matrix x(count, features.cols());
      std::vector<int> batch_labels(static_cast<std::size_t>(count));
      for (Index r = 0; r < count; ++r) {
        x.row(r) = features.row(order[static_cast<std::size_t>(start + r)]);
        batch_labels[static_cast<std::size_t>(r)] =
            labels[static_cast<std::size_t>(order[static_cast<std::size_t>(start + r)])];
      }
      auto probs = nets::forward_mlp(params, ad::leaf(std::move(x)));
      auto loss = nets::domain_loss(probs, batch_labels);
      ad::backward(loss);
      ad::sgd_step(nodes, alpha);
      ad::zero_grad(nodes);
    }
  }
  return params;
}

EmbeddingSet extract_embeddings(const nets::ModelParams& classifier,
                                const datagen::Dataset& dataset) {
  if (dataset.empty()) throw ValidationError("extract_embeddings: empty dataset");
  const Matrix features = dataset.feature_matrix();
  auto hidden = nets::forward_hidden(classifier, ad::leaf(features));
  EmbeddingSet out;
  out.points = hidden->value;
  out.record_indices.resize(dataset.size());
  std::iota(out.record_indices.begin(), out.record_indices.end(), 0);
  return out;
}

ClusterModel kmeans_fit(const Matrix& points, int k, std::uint64_t seed, int max_iters, double tol,
                        int restarts) {
  const Index m = points.rows();
  if (k < 1) throw ValidationError("kmeans_fit: k must be at least 1, got " + std::to_string(k));
  if (static_cast<Index>(k) > m) {
    throw ValidationError("kmeans_fit: k = " + std::to_string(k) + " exceeds " +
                          std::to_string(m) + " points");
  }
  if (restarts < 1) throw ValidationError("kmeans_fit: restarts must be positive");

  Rng rng(seed);
  ClusterModel best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    ClusterModel model = lloyd(points, kmeanspp_seeds(points, k, rng), max_iters, tol);
    if (model.inertia < best.inertia) best = std::move(model);
  }

  // Tiny instances additionally run Lloyd from every distinct k-subset of
  // points; randomized seeding alone can miss the global optimum there.
  if (subset_count(m, k) <= 512.0) {
    std::vector<Index> chosen(static_cast<std::size_t>(k));
    std::function<void(int, Index)> enumerate = [&](int pos, Index start) {
      if (pos == k) {
        Matrix seeds(k, points.cols());
        for (int c = 0; c < k; ++c) seeds.row(c) = points.row(chosen[static_cast<std::size_t>(c)]);
        ClusterModel model = lloyd(points, std::move(seeds), max_iters, tol);
        if (model.inertia < best.inertia) best = std::move(model);
        return;
      }
      for (Index i = start; i + (k - pos - 1) < m; ++i) {
        chosen[static_cast<std::size_t>(pos)] = i;
        enumerate(pos + 1, i + 1);
      }
    };
    enumerate(0, 0);
  }
  return best;
}

std::vector<int> assign_clusters(const ClusterModel& model, const Matrix& points) {
  if (points.cols() != model.centroids.cols()) {
    throw DimensionError("assign_clusters: points " + shape_str(points) + " vs centroids " +
                         shape_str(model.centroids));
  }
  std::vector<int> labels(static_cast<std::size_t>(points.rows()));
  for (Index i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (int c = 0; c < model.k(); ++c) {
      const double dist = (points.row(i) - model.centroids.row(c)).squaredNorm();
      if (dist < best) {  // strict: ties keep the lowest index
        best = dist;
        best_c = c;
      }
    }
    labels[static_cast<std::size_t>(i)] = best_c;
  }
  return labels;
}

datagen::Dataset relabel_unsup(const datagen::Dataset& dataset, const ClusterModel& model,
                               const EmbeddingSet& embeddings) {
  if (static_cast<std::size_t>(embeddings.points.rows()) != dataset.size() ||
      embeddings.record_indices.size() != dataset.size()) {
    throw ValidationError("relabel_unsup: embeddings misaligned with dataset (" +
                          std::to_string(embeddings.points.rows()) + " rows vs " +
                          std::to_string(dataset.size()) + " records)");
  }
  const std::vector<int> clusters = assign_clusters(model, embeddings.points);
  datagen::Dataset out = dataset;
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    out.records[static_cast<std::size_t>(embeddings.record_indices[i])].domain_label = clusters[i];
  }
  return out;
}

SoftLabelSet make_soft_labels(const nets::ModelParams& classifier,
                              const datagen::Dataset& dataset) {
  if (dataset.empty()) throw ValidationError("make_soft_labels: empty dataset");
  if (classifier.spec.output != nets::Output::kSoftmax) {
    throw ValidationError("make_soft_labels: classifier must have a softmax output");
  }
  auto probs = nets::forward_mlp(classifier, ad::leaf(dataset.feature_matrix()));
  return {probs->value};
}

double silhouette_score(const Matrix& points, const std::vector<int>& labels, int k) {
  const Index m = points.rows();
  if (static_cast<Index>(labels.size()) != m) {
    throw ValidationError("silhouette_score: label count mismatch");
  }
  if (k < 2 || m < 2) return 0.0;

  const std::vector<int> counts = label_histogram(labels, k);
  // Mean distance from each point to every cluster, accumulated pairwise.
  Matrix dist_sums = Matrix::Zero(m, k);
  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) {
      const double dist = (points.row(i) - points.row(j)).norm();
      dist_sums(i, labels[static_cast<std::size_t>(j)]) += dist;
      dist_sums(j, labels[static_cast<std::size_t>(i)]) += dist;
    }
  }

  double total = 0.0;
  for (Index i = 0; i < m; ++i) {
    const int own = labels[static_cast<std::size_t>(i)];
    if (counts[static_cast<std::size_t>(own)] <= 1) continue;  // singleton: s = 0
    const double a = dist_sums(i, own) / static_cast<double>(counts[static_cast<std::size_t>(own)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == own || counts[static_cast<std::size_t>(c)] == 0) continue;
      b = std::min(b, dist_sums(i, c) / static_cast<double>(counts[static_cast<std::size_t>(c)]));
    }
    if (std::isfinite(b)) total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(m);
}

std::vector<int> label_histogram(const std::vector<int>& labels, int k) {
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int label : labels) {
    if (label < 0 || label >= k) {
      throw ValidationError("label " + std::to_string(label) + " outside [0, " +
                            std::to_string(k) + ")");
    }
    ++counts[static_cast<std::size_t>(label)];
  }
  return counts;
}

}  // namespace datlab::relabel
