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
// Adversarial training loop and the baseline grid: data pooling, one-hot and
// learned domain embeddings, gradient-reversal training, and the relabeled
// variants, plus the invariance diagnostics (domain probe, embedding JSD).

#ifndef DATLAB_TRAINER_HPP_
#define DATLAB_TRAINER_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "datlab/common.hpp"
#include "datlab/datagen.hpp"
#include "datlab/nets.hpp"
#include "datlab/relabel.hpp"

namespace datlab::trainer {

// The log floor in the loss turns what would be -Inf (a true-class
// probability underflowing to zero) into roughly 690, so divergence is
// detected as loss above this ceiling as well as genuinely non-finite loss.
// Legitimate mean cross-entropy stays within single digits.
inline constexpr double kLossCeiling = 500.0;

enum class Method { kPool, kOnehotEmbed, kLinearEmbed, kDat, kRedatUnsup, kRedatSoft };

std::string method_name(Method method);
Method parse_method(const std::string& name);
bool is_adversarial(Method method);

struct ModelDims {
  int embed_dim = 16;
  std::vector<int> generator_hidden = {32};
  std::vector<int> classifier_hidden = {32};
  std::vector<int> task_hidden = {32};
  int linear_embed_width = 4;
};

struct TrainConfig {
  Method method = Method::kPool;
  double alpha = 0.1;
  double lambda = 1.0;
  // Steps of linear warm-up from 0 to lambda; -1 resolves to one epoch.
  int lambda_warmup_steps = -1;
  int batch_size = 64;
  int epochs = 30;
  std::uint64_t seed = 1;
  int k = 8;  // domain classes after unsupervised relabeling
  ModelDims dims;

  void validate() const;
};

struct Batch {
  Matrix x;
  std::vector<int> task_labels;
  std::vector<int> domain_labels;
  std::optional<Matrix> soft_domain;
};

struct StepLosses {
  double task = 0.0;
  double domain = 0.0;
};

// One step of the three update rules, realized by a single backward pass over
// L_R + L_C with grad_reverse(lambda_t) on the classifier branch:
//   theta_G -= alpha * (dL_R/dtheta_G - lambda * dL_C/dtheta_G)
//   theta_C -= alpha * dL_C/dtheta_C
//   theta_R -= alpha * dL_R/dtheta_R
// Returns the pre-step loss values.
StepLosses train_step_dat(nets::DatModel& model, const Batch& batch, double alpha,
                          double lambda_t);

struct TrainResult {
  nets::DatModel model;
  std::vector<StepLosses> trace;  // one entry per step
  int warmup_steps = 0;           // resolved warm-up length
};

// Trains per the configured method; deterministic per seed. redat_soft takes
// its targets from `soft_labels` or, failing that, the dataset's soft field.
TrainResult train(const TrainConfig& config, const datagen::Dataset& train_set,
                  const std::optional<relabel::SoftLabelSet>& soft_labels = std::nullopt);

// lambda_t at a given step: linear from 0, equal to lambda at warmup_steps.
double lambda_at(double lambda, int warmup_steps, int step);

struct EvalPolicy {
  // Accent-specific methods feed the domain identity to the task network;
  // unseen domains get `forced_unseen_domain` instead.
  bool use_domain_feature = false;
  int n_seen_domains = 3;
  int forced_unseen_domain = 0;
};

EvalPolicy eval_policy_for(Method method, int n_seen_domains, int forced_unseen_domain = 0);

struct CellMetrics {
  int domain = 0;
  std::string nativeness;  // "native" | "nonnative" | "avg"
  double raw_error = 0.0;
  int count = 0;
  std::optional<double> normalized_error;
};

// Misclassification rates per (domain, nativeness) plus a per-domain "avg"
// cell. Empty cells are absent from the result.
std::vector<CellMetrics> evaluate(const nets::DatModel& model, const datagen::Dataset& test,
                                  const EvalPolicy& policy);

// Held-out accuracy of a fresh linear probe trained on frozen embeddings
// against the dataset's hard domain labels. Chance level is 1/N.
double domain_probe(const nets::DatModel& model, const datagen::Dataset& dataset,
                    std::uint64_t seed);

// Fits a shared k-means codebook on all embeddings, forms per-domain code
// histograms, and returns the generalized JSD across them.
double embedding_jsd(const nets::DatModel& model, const datagen::Dataset& dataset,
                     int codebook_size = 32, std::uint64_t seed = 0);

struct MetricsReport {
  std::string method;
  std::uint64_t seed = 0;
  int n_seen_domains = 0;
  int unseen_domain = -1;  // domain id of the unseen split, -1 if none
  std::vector<CellMetrics> cells;
  double probe_accuracy = 0.0;
  double embedding_jsd = 0.0;
  nlohmann::json config_echo;
};

nlohmann::json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);

nlohmann::json train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

// Fills normalized_error on every cell: raw divided by the reference
// method's (domain 0, native) raw error of the same seed. The reference cell
// itself normalizes to exactly 1.
void normalize_reports(std::vector<MetricsReport>& reports, const std::string& reference_method);

// Flat CSV: method,domain,nativeness,raw_error,normalized_error,probe_acc,emb_jsd,seed
void write_merged_csv(const std::vector<MetricsReport>& reports, const std::string& path);

}  // namespace datlab::trainer

#endif  // DATLAB_TRAINER_HPP_
