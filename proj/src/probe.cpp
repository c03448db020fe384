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

#include "datlab/probe.hpp"

#include <algorithm>
#include <numeric>

namespace datlab::probe {

double linear_probe_accuracy(const Matrix& features, const std::vector<int>& labels,
                             int n_classes, std::uint64_t seed, const ProbeOptions& options) {
  const Index m = features.rows();
  if (m != static_cast<Index>(labels.size())) {
    throw ValidationError("linear_probe_accuracy: " + std::to_string(labels.size()) +
                          " labels for " + std::to_string(m) + " rows");
  }
  if (n_classes < 2) throw ValidationError("linear_probe_accuracy: need at least 2 classes");
  if (m < 2) throw ValidationError("linear_probe_accuracy: need at least 2 records");

  Rng rng(seed);
  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  rng.shuffle(order);
  const Index n_train = std::max<Index>(1, static_cast<Index>(options.train_fraction *
                                                              static_cast<double>(m)));
  const Index n_eval = m - n_train;
  if (n_eval < 1) throw ValidationError("linear_probe_accuracy: empty held-out split");

  Matrix w = Matrix::Zero(features.cols(), n_classes);
  Matrix bias = Matrix::Zero(1, n_classes);

  std::vector<Index> train_idx(order.begin(), order.begin() + n_train);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(train_idx);
    for (Index start = 0; start < n_train; start += options.batch_size) {
      const Index count = std::min<Index>(options.batch_size, n_train - start);
      Matrix x(count, features.cols());
      for (Index r = 0; r < count; ++r) x.row(r) = features.row(train_idx[start + r]);
      Matrix probs = softmax_rows_value((x * w).rowwise() + bias.row(0));
      for (Index r = 0; r < count; ++r) {
        probs(r, labels[static_cast<std::size_t>(train_idx[start + r])]) -= 1.0;
      }
      probs /= static_cast<double>(count);
      w.noalias() -= options.alpha * (x.transpose() * probs);
      bias.row(0) -= options.alpha * probs.colwise().sum();
    }
  }

  Index correct = 0;
  for (Index i = n_train; i < m; ++i) {
    const Index row = order[static_cast<std::size_t>(i)];
    Matrix logits = (features.row(row) * w) + bias.row(0);
    Index pred;
    logits.row(0).maxCoeff(&pred);
    if (static_cast<int>(pred) == labels[static_cast<std::size_t>(row)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n_eval);
}

}  // namespace datlab::probe
