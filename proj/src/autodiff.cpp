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

#include "datlab/autodiff.hpp"

#include <cmath>
#include <unordered_set>
#include <utility>

namespace datlab::ad {

namespace {

NodePtr make(Matrix value, const char* op, std::vector<NodePtr> parents,
             std::function<void(Node&)> backprop) {
  auto node = std::make_shared<Node>(std::move(value), op);
  node->parents = std::move(parents);
  node->backprop = std::move(backprop);
  return node;
}

void require_same_shape(const NodePtr& a, const NodePtr& b, const char* op) {
  if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a->value) + " vs " +
                         shape_str(b->value));
  }
}

}  // namespace

NodePtr leaf(Matrix value) { return std::make_shared<Node>(std::move(value)); }

NodePtr scalar(double value) {
  Matrix m(1, 1);
  m(0, 0) = value;
  return leaf(std::move(m));
}

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
  if (a->value.cols() != b->value.rows()) {
    throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a->value) + " vs " +
                         shape_str(b->value));
  }
  Matrix value = a->value * b->value;
  return make(std::move(value), "matmul", {a, b}, [](Node& n) {
    n.parents[0]->grad.noalias() += n.grad * n.parents[1]->value.transpose();
    n.parents[1]->grad.noalias() += n.parents[0]->value.transpose() * n.grad;
  });
}

NodePtr add(const NodePtr& a, const NodePtr& b) {
  require_same_shape(a, b, "add");
  return make(a->value + b->value, "add", {a, b}, [](Node& n) {
    n.parents[0]->grad += n.grad;
    n.parents[1]->grad += n.grad;
  });
}

NodePtr bias_add(const NodePtr& x, const NodePtr& bias) {
  if (bias->value.rows() != 1 || bias->value.cols() != x->value.cols()) {
    throw DimensionError("bias_add: bias " + shape_str(bias->value) + " does not broadcast over " +
                         shape_str(x->value));
  }
  Matrix value = x->value.rowwise() + bias->value.row(0);
  return make(std::move(value), "bias_add", {x, bias}, [](Node& n) {
    n.parents[0]->grad += n.grad;
    n.parents[1]->grad.row(0) += n.grad.colwise().sum();
  });
}

NodePtr tanh(const NodePtr& x) {
  Matrix value = x->value.array().tanh();
  return make(std::move(value), "tanh", {x}, [](Node& n) {
    n.parents[0]->grad.array() += n.grad.array() * (1.0 - n.value.array().square());
  });
}

NodePtr relu(const NodePtr& x) {
  Matrix value = x->value.cwiseMax(0.0);
  return make(std::move(value), "relu", {x}, [](Node& n) {
    n.parents[0]->grad.array() +=
        n.grad.array() * (n.parents[0]->value.array() > 0.0).cast<double>();
  });
}

NodePtr log(const NodePtr& x) {
  Matrix value = x->value.cwiseMax(kLogFloor).array().log();
  return make(std::move(value), "log", {x}, [](Node& n) {
    n.parents[0]->grad.array() += n.grad.array() / n.parents[0]->value.cwiseMax(kLogFloor).array();
  });
}

NodePtr scalar_mul(const NodePtr& x, double c) {
  return make(c * x->value, "scalar_mul", {x},
              [c](Node& n) { n.parents[0]->grad += c * n.grad; });
}

NodePtr hadamard(const NodePtr& a, const NodePtr& b) {
  require_same_shape(a, b, "hadamard");
  Matrix value = a->value.cwiseProduct(b->value);
  return make(std::move(value), "hadamard", {a, b}, [](Node& n) {
    n.parents[0]->grad += n.grad.cwiseProduct(n.parents[1]->value);
    n.parents[1]->grad += n.grad.cwiseProduct(n.parents[0]->value);
  });
}

NodePtr concat_cols(const NodePtr& a, const NodePtr& b) {
  if (a->value.rows() != b->value.rows()) {
    throw DimensionError("concat_cols: row counts disagree, " + shape_str(a->value) + " vs " +
                         shape_str(b->value));
  }
  Matrix value(a->value.rows(), a->value.cols() + b->value.cols());
  value << a->value, b->value;
  return make(std::move(value), "concat_cols", {a, b}, [](Node& n) {
    const Index left = n.parents[0]->value.cols();
    n.parents[0]->grad += n.grad.leftCols(left);
    n.parents[1]->grad += n.grad.rightCols(n.grad.cols() - left);
  });
}

NodePtr mean_reduce(const NodePtr& x) {
  Matrix value(1, 1);
  value(0, 0) = x->value.mean();
  const double inv_size = 1.0 / static_cast<double>(x->value.size());
  return make(std::move(value), "mean_reduce", {x}, [inv_size](Node& n) {
    n.parents[0]->grad.array() += n.grad(0, 0) * inv_size;
  });
}

NodePtr softmax_rows(const NodePtr& logits) {
  if (logits->value.cols() < 1) {
    throw DimensionError("softmax_rows: need at least one column");
  }
  Matrix value = softmax_rows_value(logits->value);
  return make(std::move(value), "softmax_rows", {logits}, [](Node& n) {
    // dL/dx_j = y_j * (g_j - sum_i g_i y_i), row by row.
    for (Index r = 0; r < n.value.rows(); ++r) {
      const double dot = n.grad.row(r).dot(n.value.row(r));
      n.parents[0]->grad.row(r).array() +=
          n.value.row(r).array() * (n.grad.row(r).array() - dot);
    }
  });
}

NodePtr cross_entropy_soft(const NodePtr& pred_probs, const Matrix& targets) {
  if (pred_probs->value.rows() != targets.rows() || pred_probs->value.cols() != targets.cols()) {
    throw DimensionError("cross_entropy_soft: prediction " + shape_str(pred_probs->value) +
                         " vs targets " + shape_str(targets));
  }
  for (Index r = 0; r < targets.rows(); ++r) {
    if (std::abs(targets.row(r).sum() - 1.0) > 1e-9) {
      throw ValidationError("cross_entropy_soft: target row " + std::to_string(r) +
                            " sums to " + std::to_string(targets.row(r).sum()) + ", expected 1");
    }
  }
  const double m = static_cast<double>(targets.rows());
  Matrix value(1, 1);
  value(0, 0) =
      -(targets.array() * pred_probs->value.cwiseMax(kLogFloor).array().log()).sum() / m;
  return make(std::move(value), "cross_entropy_soft", {pred_probs}, [targets, m](Node& n) {
    n.parents[0]->grad.array() +=
        n.grad(0, 0) * (-targets.array() / n.parents[0]->value.cwiseMax(kLogFloor).array()) / m;
  });
}

NodePtr grad_reverse(const NodePtr& x, double lambda) {
  if (lambda < 0.0) {
    throw ValidationError("grad_reverse: lambda must be nonnegative, got " +
                          std::to_string(lambda));
  }
  return make(x->value, "grad_reverse", {x},
              [lambda](Node& n) { n.parents[0]->grad -= lambda * n.grad; });
}

void backward(const NodePtr& root) {
  if (!root->is_scalar()) {
    throw ValidationError("backward: root must be scalar, got " + shape_str(root->value));
  }
  // Iterative post-order DFS; `order` ends up topologically sorted.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next_parent] = stack.back();
    if (next_parent < node->parents.size()) {
      Node* parent = node->parents[next_parent++].get();
      if (visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  // Interior grads are per-call scratch; leaves keep accumulating across
  // calls so losses backed through shared parameters sum up.
  for (Node* node : order) {
    if (node->backprop) node->grad.setZero();
  }
  root->grad(0, 0) += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backprop) (*it)->backprop(**it);
  }
}

void zero_grad(const std::vector<NodePtr>& nodes) {
  for (const auto& node : nodes) node->grad.setZero();
}

void sgd_step(const std::vector<NodePtr>& params, double alpha) {
  for (const auto& param : params) param->value -= alpha * param->grad;
}

}  // namespace datlab::ad
