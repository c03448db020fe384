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

#include "datlab/theory.hpp"

#include <cmath>

namespace datlab::theory {

namespace {

void require_same_support(const std::vector<DiscreteDistribution>& dists) {
  if (dists.size() < 2) {
    throw ValidationError("need at least 2 distributions, got " + std::to_string(dists.size()));
  }
  const Index s = dists.front().size();
  for (const auto& d : dists) {
    if (d.size() != s) {
      throw ValidationError("support sizes disagree: " + std::to_string(s) + " vs " +
                            std::to_string(d.size()));
    }
  }
}

}  // namespace

DiscreteDistribution::DiscreteDistribution(Vector probs) : probs_(std::move(probs)) {
  if (probs_.size() < 1) throw ValidationError("DiscreteDistribution: empty support");
  if (probs_.minCoeff() < 0.0) {
    throw ValidationError("DiscreteDistribution: negative probability " +
                          std::to_string(probs_.minCoeff()));
  }
  if (std::abs(probs_.sum() - 1.0) > 1e-9) {
    throw ValidationError("DiscreteDistribution: probabilities sum to " +
                          std::to_string(probs_.sum()) + ", expected 1");
  }
}

DiscreteDistribution DiscreteDistribution::from_logits(const Vector& logits) {
  Vector p = (logits.array() - logits.maxCoeff()).exp();
  p /= p.sum();
  return DiscreteDistribution(std::move(p));
}

ClassifierTable::ClassifierTable(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 2 || values_.cols() < 1) {
    throw ValidationError("ClassifierTable: need at least 2 classes and 1 support point, got " +
                          shape_str(values_));
  }
  for (Index s = 0; s < values_.cols(); ++s) {
    if (std::abs(values_.col(s).sum() - 1.0) > 1e-9) {
      throw ValidationError("ClassifierTable: column " + std::to_string(s) + " sums to " +
                            std::to_string(values_.col(s).sum()) + ", expected 1");
    }
  }
  if (values_.minCoeff() <= 0.0 || values_.maxCoeff() >= 1.0) {
    throw ValidationError("ClassifierTable: entries must lie strictly inside (0, 1)");
  }
}

std::vector<DiscreteDistribution> GeneratorLogits::distributions() const {
  std::vector<DiscreteDistribution> dists;
  dists.reserve(static_cast<std::size_t>(logits.rows()));
  for (Index i = 0; i < logits.rows(); ++i) {
    dists.push_back(DiscreteDistribution::from_logits(logits.row(i).transpose()));
  }
  return dists;
}

double kld(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  if (p.size() != q.size()) {
    throw ValidationError("kld: support sizes disagree, " + std::to_string(p.size()) + " vs " +
                          std::to_string(q.size()));
  }
  double total = 0.0;
  for (Index s = 0; s < p.size(); ++s) {
    if (p(s) == 0.0) continue;
    if (q(s) == 0.0) {
      throw ValidationError("kld: undefined, q has zero mass at support point " +
                            std::to_string(s) + " where p is positive");
    }
    total += p(s) * std::log(p(s) / q(s));
  }
  return total;
}

DiscreteDistribution mixture(const std::vector<DiscreteDistribution>& dists) {
  require_same_support(dists);
  Vector m = Vector::Zero(dists.front().size());
  for (const auto& d : dists) m += d.probs();
  m /= static_cast<double>(dists.size());
  return DiscreteDistribution(std::move(m));
}

double jsd(const std::vector<DiscreteDistribution>& dists) {
  const DiscreteDistribution m = mixture(dists);
  double total = 0.0;
  for (const auto& d : dists) total += kld(d, m);
  return total;
}

double jsd_normalized(const std::vector<DiscreteDistribution>& dists) {
  return jsd(dists) / static_cast<double>(dists.size());
}

double total_variation(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  if (p.size() != q.size()) {
    throw ValidationError("total_variation: support sizes disagree");
  }
  return 0.5 * (p.probs() - q.probs()).cwiseAbs().sum();
}

ClassifierTable optimal_classifier(const std::vector<DiscreteDistribution>& dists) {
  require_same_support(dists);
  const Index n = static_cast<Index>(dists.size());
  const Index s = dists.front().size();
  Matrix table(n, s);
  for (Index col = 0; col < s; ++col) {
    double mass = 0.0;
    for (Index i = 0; i < n; ++i) mass += dists[static_cast<std::size_t>(i)](col);
    if (mass <= 0.0) {
      throw ValidationError("optimal_classifier: undefined at support point " +
                            std::to_string(col) + ", all distributions have zero mass");
    }
    for (Index i = 0; i < n; ++i) {
      const double c = dists[static_cast<std::size_t>(i)](col) / mass;
      table(i, col) = std::min(1.0 - kTableEps, std::max(kTableEps, c));
    }
  }
  return ClassifierTable(std::move(table));
}

double value_function(const std::vector<DiscreteDistribution>& dists,
                      const ClassifierTable& table) {
  if (static_cast<Index>(dists.size()) != table.n_classes() ||
      dists.front().size() != table.support_size()) {
    throw ValidationError("value_function: table " + shape_str(table.values()) +
                          " does not match " + std::to_string(dists.size()) +
                          " distributions on " + std::to_string(dists.front().size()) +
                          " support points");
  }
  double total = 0.0;
  for (Index i = 0; i < table.n_classes(); ++i) {
    for (Index s = 0; s < table.support_size(); ++s) {
      const double p = dists[static_cast<std::size_t>(i)](s);
      if (p > 0.0) total += p * std::log(table(i, s));
    }
  }
  return total;
}

InnerMaxResult verify_inner_max(const std::vector<DiscreteDistribution>& dists, int steps,
                                double step_size) {
  require_same_support(dists);
  const Index n = static_cast<Index>(dists.size());
  const Index s = dists.front().size();
  const ClassifierTable target = optimal_classifier(dists);

  // Column-wise softmax parameterization keeps every candidate feasible.
  Matrix logits = Matrix::Zero(n, s);
  Matrix table(n, s);
  Vector col_mass(s);
  for (Index col = 0; col < s; ++col) {
    double mass = 0.0;
    for (Index i = 0; i < n; ++i) mass += dists[static_cast<std::size_t>(i)](col);
    col_mass(col) = mass;
  }

  auto refresh_table = [&]() {
    for (Index col = 0; col < s; ++col) {
      const double m = logits.col(col).maxCoeff();
      table.col(col) = (logits.col(col).array() - m).exp();
      table.col(col) /= table.col(col).sum();
    }
  };

  int step = 0;
  double sup_error = std::numeric_limits<double>::infinity();
  for (; step < steps; ++step) {
    refresh_table();
    sup_error = (table - target.values()).cwiseAbs().maxCoeff();
    if (sup_error < 1e-12) break;
    // dV/dlogit(i, s) = P_i(s) - C_i(s) * col_mass(s)
    for (Index col = 0; col < s; ++col) {
      for (Index i = 0; i < n; ++i) {
        const double g = dists[static_cast<std::size_t>(i)](col) - table(i, col) * col_mass(col);
        logits(i, col) += step_size * g;
      }
    }
  }
  refresh_table();
  sup_error = (table - target.values()).cwiseAbs().maxCoeff();
  table = table.cwiseMax(kTableEps).cwiseMin(1.0 - kTableEps);
  return {ClassifierTable(std::move(table)), sup_error, step};
}

MinimaxResult verify_minimax(int n, int s, std::uint64_t seed, int steps, double step_size) {
  if (n < 2) throw ValidationError("verify_minimax: need n >= 2, got " + std::to_string(n));
  if (s < 2) throw ValidationError("verify_minimax: need s >= 2, got " + std::to_string(s));

  Rng rng(seed);
  GeneratorLogits gen{Matrix(n, s)};
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < s; ++j) gen.logits(i, j) = rng.normal();
  }
  return verify_minimax_from(std::move(gen), steps, step_size);
}

MinimaxResult verify_minimax_from(GeneratorLogits gen, int steps, double step_size) {
  const Index n = gen.logits.rows();
  const Index s = gen.logits.cols();
  if (n < 2) throw ValidationError("verify_minimax: need n >= 2, got " + std::to_string(n));
  if (s < 2) throw ValidationError("verify_minimax: need s >= 2, got " + std::to_string(s));

  const double target_value = -static_cast<double>(n) * std::log(static_cast<double>(n));
  MinimaxResult result;
  result.trace.reserve(static_cast<std::size_t>(steps));

  auto max_pairwise_tv = [](const std::vector<DiscreteDistribution>& dists) {
    double worst = 0.0;
    for (std::size_t i = 0; i < dists.size(); ++i) {
      for (std::size_t j = i + 1; j < dists.size(); ++j) {
        worst = std::max(worst, total_variation(dists[i], dists[j]));
      }
    }
    return worst;
  };

  double prev_value = std::numeric_limits<double>::infinity();
  int rising = 0;
  for (int step = 0; step < steps; ++step) {
    const auto dists = gen.distributions();
    const ClassifierTable table = optimal_classifier(dists);
    const double value = value_function(dists, table);
    const double divergence = jsd(dists);
    result.trace.push_back({value, divergence});

    if (value > prev_value) {
      if (++rising >= 100) {
        throw OptimizationFailure("verify_minimax: value increased for 100 consecutive steps");
      }
    } else {
      rising = 0;
    }
    prev_value = value;

    // Equal distributions is the end state; the tolerance on jsd alone
    // admits pairwise gaps near 0.025, so total variation is checked too.
    if (divergence < kJsdTol && std::abs(value - target_value) < kValueTol &&
        max_pairwise_tv(dists) < kTvTol) {
      result.converged = true;
      result.final_dists = dists;
      result.final_value = value;
      return result;
    }

    // One descent step on the generator logits with the table frozen:
    // dV/dlogit(i, s) = P_i(s) * (log C_i(s) - sum_t P_i(t) log C_i(t)).
    for (Index i = 0; i < n; ++i) {
      const Vector& p = dists[static_cast<std::size_t>(i)].probs();
      Vector log_c(s);
      for (Index t = 0; t < s; ++t) log_c(t) = std::log(table(i, t));
      const double expected = p.dot(log_c);
      for (Index j = 0; j < s; ++j) {
        gen.logits(i, j) -= step_size * p(j) * (log_c(j) - expected);
      }
    }
  }

  result.final_dists = gen.distributions();
  result.final_value = result.trace.empty() ? 0.0 : result.trace.back().value;
  result.converged = false;
  return result;
}

DiscreteDistribution soft_label_mixture(const Vector& soft_label,
                                        const std::vector<DiscreteDistribution>& dists) {
  if (static_cast<std::size_t>(soft_label.size()) != dists.size()) {
    throw ValidationError("soft_label_mixture: label length " + std::to_string(soft_label.size()) +
                          " does not match " + std::to_string(dists.size()) + " distributions");
  }
  if (soft_label.minCoeff() < 0.0 || std::abs(soft_label.sum() - 1.0) > 1e-9) {
    throw ValidationError("soft_label_mixture: soft label is not a probability vector");
  }
  require_same_support(dists);
  Vector out = Vector::Zero(dists.front().size());
  for (std::size_t i = 0; i < dists.size(); ++i) {
    out += soft_label(static_cast<Index>(i)) * dists[i].probs();
  }
  return DiscreteDistribution(std::move(out));
}

}  // namespace datlab::theory
