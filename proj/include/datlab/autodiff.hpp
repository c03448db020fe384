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

#ifndef DATLAB_AUTODIFF_HPP_
#define DATLAB_AUTODIFF_HPP_

#include <functional>
#include <memory>
#include <vector>

#include "datlab/common.hpp"

namespace datlab::ad {

// Floor applied inside log-like ops so exact zeros stay finite.
inline constexpr double kLogFloor = 1e-300;

class Node;
using NodePtr = std::shared_ptr<Node>;

// One vertex of the backward graph. `value` is fixed at construction; `grad`
// accumulates contributions from every consumer during backward(). Nodes form
// a DAG through `parents`; leaves have no parents and no backprop function.
class Node {
 public:
  explicit Node(Matrix v, const char* op_tag = "leaf")
      : value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())), op(op_tag) {}

  Matrix value;
  Matrix grad;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backprop;
  const char* op;

  bool is_scalar() const { return value.rows() == 1 && value.cols() == 1; }
};

// Leaf node holding an input or a parameter tensor.
NodePtr leaf(Matrix value);
NodePtr scalar(double value);

NodePtr matmul(const NodePtr& a, const NodePtr& b);
NodePtr add(const NodePtr& a, const NodePtr& b);
// x is [m x n], bias is [1 x n], broadcast over rows.
NodePtr bias_add(const NodePtr& x, const NodePtr& bias);
NodePtr tanh(const NodePtr& x);
NodePtr relu(const NodePtr& x);
NodePtr log(const NodePtr& x);
NodePtr scalar_mul(const NodePtr& x, double c);
NodePtr hadamard(const NodePtr& a, const NodePtr& b);
NodePtr concat_cols(const NodePtr& a, const NodePtr& b);
// Mean over all entries; result is 1x1.
NodePtr mean_reduce(const NodePtr& x);
// Row-wise softmax with max subtraction; rows sum to 1, entries in (0,1).
NodePtr softmax_rows(const NodePtr& logits);
// -(1/m) sum_rows sum_i target_i * log(pred_i). Targets are fixed
// probabilities, one normalized row per prediction row.
NodePtr cross_entropy_soft(const NodePtr& pred_probs, const Matrix& targets);
// Identity forward; backward multiplies the upstream gradient by -lambda.
NodePtr grad_reverse(const NodePtr& x, double lambda);

// Populates grads of every node reachable from `root` (which must be scalar)
// in reverse topological order. Grads accumulate across calls until cleared.
void backward(const NodePtr& root);

void zero_grad(const std::vector<NodePtr>& nodes);
void sgd_step(const std::vector<NodePtr>& params, double alpha);

}  // namespace datlab::ad

#endif  // DATLAB_AUTODIFF_HPP_
