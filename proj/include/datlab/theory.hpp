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
// Numerical verification of the adversarial minimax on finite discrete
// supports: the closed-form optimal classifier, the value function, the
// KLD/JSD identity, and convergence of alternating optimization to equal
// distributions with value -N log N. Natural logarithms throughout.

#ifndef DATLAB_THEORY_HPP_
#define DATLAB_THEORY_HPP_

#include <cstdint>
#include <vector>

#include "datlab/common.hpp"

namespace datlab::theory {

// Entries of a classifier table are clamped into [kTableEps, 1 - kTableEps]
// so they stay in the open interval the softmax constraints require.
inline constexpr double kTableEps = 1e-12;

// Convergence tolerances of the minimax verification. All three must hold
// at termination: the divergence, the gap to -N log N, and the largest
// pairwise total-variation distance.
inline constexpr double kJsdTol = 1e-3;
inline constexpr double kValueTol = 1e-2;
inline constexpr double kTvTol = 0.02;

// Probability vector on a finite support.
class DiscreteDistribution {
 public:
  explicit DiscreteDistribution(Vector probs);
  static DiscreteDistribution from_logits(const Vector& logits);

  Index size() const { return probs_.size(); }
  double operator()(Index s) const { return probs_(s); }
  const Vector& probs() const { return probs_; }

 private:
  Vector probs_;
};

// Per-domain classifier responses on the support: entry (i, s) is C_i at
// support point s. Columns sum to 1; entries lie strictly inside (0, 1).
class ClassifierTable {
 public:
  explicit ClassifierTable(Matrix values);

  Index n_classes() const { return values_.rows(); }
  Index support_size() const { return values_.cols(); }
  double operator()(Index i, Index s) const { return values_(i, s); }
  const Matrix& values() const { return values_; }

 private:
  Matrix values_;
};

// Unconstrained parameterization of N distributions: row i induces
// P_i = softmax(row i).
struct GeneratorLogits {
  Matrix logits;  // [N x S]
  std::vector<DiscreteDistribution> distributions() const;
};

// sum_s p_s log(p_s / q_s), with 0 log 0 = 0. Requires q > 0 wherever p > 0.
double kld(const DiscreteDistribution& p, const DiscreteDistribution& q);

// Uniform mixture M = (sum_i P_i) / N.
DiscreteDistribution mixture(const std::vector<DiscreteDistribution>& dists);

// Generalized JSD in the unnormalized-sum convention: sum_i KLD(P_i || M).
double jsd(const std::vector<DiscreteDistribution>& dists);
// Conventional variant with 1/N weights, provided to avoid ambiguity.
double jsd_normalized(const std::vector<DiscreteDistribution>& dists);

// 0.5 * sum_s |p_s - q_s|.
double total_variation(const DiscreteDistribution& p, const DiscreteDistribution& q);

// Closed form of the inner maximum: entry (i, s) = P_i(s) / sum_j P_j(s).
ClassifierTable optimal_classifier(const std::vector<DiscreteDistribution>& dists);

// sum_i sum_s P_i(s) log table(i, s) -- the log-likelihood objective.
double value_function(const std::vector<DiscreteDistribution>& dists,
                      const ClassifierTable& table);

struct InnerMaxResult {
  ClassifierTable table;
  double sup_error;  // sup-norm distance to the closed form
  int steps_used;
};

// Maximizes the value function over tables by gradient ascent on per-column
// logits and reports the distance to optimal_classifier. Non-convergence is
// reported through sup_error, never thrown.
InnerMaxResult verify_inner_max(const std::vector<DiscreteDistribution>& dists, int steps = 20000,
                                double step_size = 0.5);

struct MinimaxStep {
  double value;
  double jsd;
};

struct MinimaxResult {
  std::vector<MinimaxStep> trace;
  std::vector<DiscreteDistribution> final_dists;
  double final_value = 0.0;
  bool converged = false;
};

// Alternating optimization: refit the classifier in closed form, then take
// one gradient step on the generator logits against the value. Converged
// means jsd < kJsdTol and |value + N log N| < kValueTol. Throws
// OptimizationFailure if the value increases for 100 consecutive steps.
MinimaxResult verify_minimax(int n, int s, std::uint64_t seed, int steps = 20000,
                             double step_size = 1.0);

// Same alternating optimization from explicit initial logits.
MinimaxResult verify_minimax_from(GeneratorLogits init, int steps = 20000,
                                  double step_size = 1.0);

// sum_i l_i * P_i for a normalized soft label l.
DiscreteDistribution soft_label_mixture(const Vector& soft_label,
                                        const std::vector<DiscreteDistribution>& dists);

}  // namespace datlab::theory

#endif  // DATLAB_THEORY_HPP_
