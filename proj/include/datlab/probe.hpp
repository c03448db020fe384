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

#ifndef DATLAB_PROBE_HPP_
#define DATLAB_PROBE_HPP_

#include <cstdint>
#include <vector>

#include "datlab/common.hpp"

namespace datlab::probe {

struct ProbeOptions {
  int epochs = 40;
  int batch_size = 64;
  double alpha = 0.2;
  double train_fraction = 0.8;
};

// Trains a linear softmax classifier on (features, labels) with plain SGD on
// a seeded 80/20 split and returns held-out accuracy. Deterministic per seed.
double linear_probe_accuracy(const Matrix& features, const std::vector<int>& labels,
                             int n_classes, std::uint64_t seed, const ProbeOptions& options = {});

}  // namespace datlab::probe

#endif  // DATLAB_PROBE_HPP_
