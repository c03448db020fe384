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

#include "datlab/trainer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>

#include "datlab/probe.hpp"
#include "datlab/theory.hpp"

namespace datlab::trainer {

using nlohmann::json;

std::string method_name(Method method) {
  switch (method) {
    case Method::kPool: return "pool";
    case Method::kOnehotEmbed: return "onehot_embed";
    case Method::kLinearEmbed: return "linear_embed";
    case Method::kDat: return "dat";
    case Method::kRedatUnsup: return "redat_unsup";
    case Method::kRedatSoft: return "redat_soft";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::kPool, Method::kOnehotEmbed, Method::kLinearEmbed, Method::kDat,
                   Method::kRedatUnsup, Method::kRedatSoft}) {
    if (method_name(m) == name) return m;
  }
  throw ValidationError("unknown method \"" + name + "\"");
}

bool is_adversarial(Method method) {
  return method == Method::kDat || method == Method::kRedatUnsup ||
         method == Method::kRedatSoft;
}

void TrainConfig::validate() const {
  if (alpha <= 0.0) throw ValidationError("alpha must be positive, got " + std::to_string(alpha));
  if (is_adversarial(method) && lambda <= 0.0) {
    throw ValidationError("lambda must be positive for " + method_name(method) + ", got " +
                          std::to_string(lambda));
  }
  if (lambda < 0.0) throw ValidationError("lambda must be nonnegative");
  if (lambda_warmup_steps < -1) {
    throw ValidationError("lambda_warmup_steps must be >= 0 (or -1 for one epoch)");
  }
  if (batch_size < 1) throw ValidationError("batch_size must be positive");
  if (epochs < 1) throw ValidationError("epochs must be positive");
  if (method == Method::kRedatUnsup && k < 2) {
    throw ValidationError("redat_unsup needs k >= 2, got " + std::to_string(k));
  }
}

double lambda_at(double lambda, int warmup_steps, int step) {
  if (warmup_steps <= 0 || step >= warmup_steps) return lambda;
  return lambda * static_cast<double>(step) / static_cast<double>(warmup_steps);
}

StepLosses train_step_dat(nets::DatModel& model, const Batch& batch, double alpha,
                          double lambda_t) {
  if (batch.x.rows() == 0) throw ValidationError("train_step_dat: empty batch");
  if (lambda_t < 0.0) throw ValidationError("train_step_dat: lambda_t must be nonnegative");

  auto z = nets::forward_generator(model.generator, batch.x);
  auto domain_probs = nets::forward_classifier(model.domain_classifier, z, /*reverse=*/true,
                                               lambda_t);
  auto loss_c = batch.soft_domain
                    ? nets::domain_loss(domain_probs, *batch.soft_domain)
                    : nets::domain_loss(domain_probs, batch.domain_labels);
  auto task_probs = nets::forward_task(model.task_net, z, std::nullopt);
  auto loss_r = nets::task_loss(task_probs, batch.task_labels);
  auto total = ad::add(loss_r, loss_c);
  ad::backward(total);

  const StepLosses losses{loss_r->value(0, 0), loss_c->value(0, 0)};
  const auto params = model.all_params();
  ad::sgd_step(params, alpha);
  ad::zero_grad(params);
  return losses;
}

namespace {

// One task-only step, optionally with a domain feature appended to the task
// input. Shares the update mechanics with train_step_dat.
StepLosses train_step_task(nets::DatModel& model, const Batch& batch, double alpha,
                           Method method) {
  auto z = nets::forward_generator(model.generator, batch.x);
  std::optional<ad::NodePtr> feature;
  if (method == Method::kOnehotEmbed) {
    feature = ad::leaf(one_hot(batch.domain_labels, model.n_domains()));
  } else if (method == Method::kLinearEmbed) {
    feature = ad::matmul(ad::leaf(one_hot(batch.domain_labels, model.n_domains())),
                         *model.domain_embed);
  }
  auto task_probs = nets::forward_task(model.task_net, z, feature);
  auto loss_r = nets::task_loss(task_probs, batch.task_labels);
  ad::backward(loss_r);

  const StepLosses losses{loss_r->value(0, 0), 0.0};
  const auto params = model.all_params();
  ad::sgd_step(params, alpha);
  ad::zero_grad(params);
  return losses;
}

int infer_classes(const std::vector<int>& labels, const char* what) {
  int max_label = -1;
  for (int label : labels) {
    if (label < 0) throw ValidationError(std::string(what) + ": negative label");
    max_label = std::max(max_label, label);
  }
  if (max_label < 1) {
    throw ValidationError(std::string(what) + ": need at least 2 classes, got " +
                          std::to_string(max_label + 1));
  }
  return max_label + 1;
}

}  // namespace

TrainResult train(const TrainConfig& config, const datagen::Dataset& train_set,
                  const std::optional<relabel::SoftLabelSet>& soft_labels) {
  config.validate();
  if (train_set.empty()) throw ValidationError("train: empty dataset");

  const Matrix features = train_set.feature_matrix();
  const std::vector<int> task_labels = train_set.task_labels();
  const std::vector<int> domain_labels = train_set.domain_labels();
  const int n_task = infer_classes(task_labels, "task labels");

  std::optional<Matrix> soft;
  int n_domains = 0;
  if (config.method == Method::kRedatSoft) {
    if (soft_labels) {
      soft = soft_labels->labels;
    } else if (train_set.has_soft_labels()) {
      soft = train_set.soft_label_matrix();
    } else {
      throw ValidationError("redat_soft requires soft domain labels");
    }
    if (soft->rows() != static_cast<Index>(train_set.size())) {
      throw ValidationError("soft labels have " + std::to_string(soft->rows()) + " rows for " +
                            std::to_string(train_set.size()) + " records");
    }
    n_domains = static_cast<int>(soft->cols());
    if (n_domains < 2) throw ValidationError("soft labels need at least 2 columns");
  } else if (config.method == Method::kRedatUnsup) {
    const int present = infer_classes(domain_labels, "domain labels");
    if (present > config.k) {
      throw ValidationError("redat_unsup: domain label " + std::to_string(present - 1) +
                            " outside relabeled range [0, " + std::to_string(config.k) + ")");
    }
    n_domains = config.k;
  } else {
    n_domains = infer_classes(domain_labels, "domain labels");
  }

  nets::DatModelConfig model_config;
  model_config.input_dim = static_cast<int>(features.cols());
  model_config.embed_dim = config.dims.embed_dim;
  model_config.generator_hidden = config.dims.generator_hidden;
  model_config.classifier_hidden = config.dims.classifier_hidden;
  model_config.task_hidden = config.dims.task_hidden;
  model_config.n_domain_classes = n_domains;
  model_config.n_task_classes = n_task;
  model_config.linear_embed_width = config.dims.linear_embed_width;
  model_config.lambda = config.lambda;
  if (config.method == Method::kOnehotEmbed) {
    model_config.domain_feature = nets::DomainFeature::kOneHot;
  } else if (config.method == Method::kLinearEmbed) {
    model_config.domain_feature = nets::DomainFeature::kLearned;
  }

  TrainResult result;
  result.model = nets::make_dat_model(model_config, config.seed);

  const Index m = static_cast<Index>(train_set.size());
  const int steps_per_epoch =
      static_cast<int>((m + config.batch_size - 1) / config.batch_size);
  result.warmup_steps =
      config.lambda_warmup_steps >= 0 ? config.lambda_warmup_steps : steps_per_epoch;

  Rng rng(mix_seed(config.seed, 10));
  std::vector<Index> order(train_set.size());
  std::iota(order.begin(), order.end(), Index{0});

  int step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (Index start = 0; start < m; start += config.batch_size) {
      const Index count = std::min<Index>(config.batch_size, m - start);
      Batch batch;
      batch.x.resize(count, features.cols());
      batch.task_labels.resize(static_cast<std::size_t>(count));
      batch.domain_labels.resize(static_cast<std::size_t>(count));
      if (soft) batch.soft_domain = Matrix(count, soft->cols());
      for (Index r = 0; r < count; ++r) {
        const Index row = order[static_cast<std::size_t>(start + r)];
        batch.x.row(r) = features.row(row);
        batch.task_labels[static_cast<std::size_t>(r)] =
            task_labels[static_cast<std::size_t>(row)];
        batch.domain_labels[static_cast<std::size_t>(r)] =
            domain_labels[static_cast<std::size_t>(row)];
        if (soft) batch.soft_domain->row(r) = soft->row(row);
      }

      StepLosses losses;
      if (is_adversarial(config.method)) {
        const double lambda_t = lambda_at(config.lambda, result.warmup_steps, step);
        losses = train_step_dat(result.model, batch, config.alpha, lambda_t);
      } else {
        losses = train_step_task(result.model, batch, config.alpha, config.method);
      }
      if (!std::isfinite(losses.task) || !std::isfinite(losses.domain) ||
          losses.task > kLossCeiling || losses.domain > kLossCeiling) {
        throw TrainingDiverged("non-finite loss at step " + std::to_string(step) + " (task=" +
                               std::to_string(losses.task) + ", domain=" +
                               std::to_string(losses.domain) + ")");
      }
      result.trace.push_back(losses);
      ++step;
    }
  }
  return result;
}

EvalPolicy eval_policy_for(Method method, int n_seen_domains, int forced_unseen_domain) {
  EvalPolicy policy;
  policy.use_domain_feature =
      method == Method::kOnehotEmbed || method == Method::kLinearEmbed;
  policy.n_seen_domains = n_seen_domains;
  policy.forced_unseen_domain = forced_unseen_domain;
  return policy;
}

std::vector<CellMetrics> evaluate(const nets::DatModel& model, const datagen::Dataset& test,
                                  const EvalPolicy& policy) {
  if (test.empty()) throw ValidationError("evaluate: empty dataset");
  const Matrix features = test.feature_matrix();
  auto z = nets::forward_generator(model.generator, features);

  std::optional<ad::NodePtr> feature;
  if (policy.use_domain_feature) {
    std::vector<int> ids = test.domain_labels();
    for (int& id : ids) {
      if (id >= policy.n_seen_domains) id = policy.forced_unseen_domain;
    }
    auto onehot = ad::leaf(one_hot(ids, model.n_domains()));
    feature = model.domain_embed ? ad::matmul(onehot, *model.domain_embed) : onehot;
  }
  auto probs = nets::forward_task(model.task_net, z, feature);

  // errors[domain][0]=native, [1]=nonnative: {wrong, total}
  std::map<int, std::array<std::pair<int, int>, 2>> counts;
  for (Index i = 0; i < probs->value.rows(); ++i) {
    Index pred;
    probs->value.row(i).maxCoeff(&pred);
    const auto& rec = test.records[static_cast<std::size_t>(i)];
    auto& cell = counts[rec.domain_label][rec.native ? 0 : 1];
    cell.second += 1;
    if (static_cast<int>(pred) != rec.task_label) cell.first += 1;
  }

  std::vector<CellMetrics> cells;
  for (const auto& [domain, pair] : counts) {
    const auto& native = pair[0];
    const auto& nonnative = pair[1];
    if (native.second > 0) {
      cells.push_back({domain, "native",
                       static_cast<double>(native.first) / native.second, native.second, {}});
    }
    if (nonnative.second > 0) {
      cells.push_back({domain, "nonnative",
                       static_cast<double>(nonnative.first) / nonnative.second,
                       nonnative.second, {}});
    }
    const int total = native.second + nonnative.second;
    cells.push_back({domain, "avg",
                     static_cast<double>(native.first + nonnative.first) / total, total, {}});
  }
  return cells;
}

double domain_probe(const nets::DatModel& model, const datagen::Dataset& dataset,
                    std::uint64_t seed) {
  if (dataset.empty()) throw ValidationError("domain_probe: empty dataset");
  const std::vector<int> labels = dataset.domain_labels();
  const int n_classes = infer_classes(labels, "domain labels");
  auto z = nets::forward_generator(model.generator, dataset.feature_matrix());
  return probe::linear_probe_accuracy(z->value, labels, n_classes, seed);
}

double embedding_jsd(const nets::DatModel& model, const datagen::Dataset& dataset,
                     int codebook_size, std::uint64_t seed) {
  if (dataset.empty()) throw ValidationError("embedding_jsd: empty dataset");
  if (static_cast<Index>(dataset.size()) < codebook_size) {
    throw ValidationError("embedding_jsd: " + std::to_string(dataset.size()) +
                          " records is fewer than codebook_size " +
                          std::to_string(codebook_size));
  }
  const std::vector<int> labels = dataset.domain_labels();
  const int n_domains = infer_classes(labels, "domain labels");
  auto z = nets::forward_generator(model.generator, dataset.feature_matrix());
  const relabel::ClusterModel codebook =
      relabel::kmeans_fit(z->value, codebook_size, seed, /*max_iters=*/60, /*tol=*/1e-6,
                          /*restarts=*/2);
  const std::vector<int> codes = relabel::assign_clusters(codebook, z->value);

  std::vector<theory::DiscreteDistribution> dists;
  for (int domain = 0; domain < n_domains; ++domain) {
    Vector hist = Vector::Zero(codebook_size);
    int total = 0;
    for (std::size_t i = 0; i < codes.size(); ++i) {
      if (labels[i] == domain) {
        hist(codes[i]) += 1.0;
        ++total;
      }
    }
    if (total == 0) {
      throw ValidationError("embedding_jsd: domain " + std::to_string(domain) + " has no records");
    }
    dists.emplace_back(hist / static_cast<double>(total));
  }
  return theory::jsd(dists);
}

json report_to_json(const MetricsReport& report) {
  json cells = json::array();
  for (const auto& cell : report.cells) {
    json c;
    c["domain"] = cell.domain;
    c["nativeness"] = cell.nativeness;
    c["raw_error"] = cell.raw_error;
    c["count"] = cell.count;
    if (cell.normalized_error) c["normalized_error"] = *cell.normalized_error;
    cells.push_back(std::move(c));
  }
  json j;
  j["method"] = report.method;
  j["seed"] = report.seed;
  j["n_seen_domains"] = report.n_seen_domains;
  j["unseen_domain"] = report.unseen_domain;
  j["cells"] = std::move(cells);
  j["probe_accuracy"] = report.probe_accuracy;
  j["embedding_jsd"] = report.embedding_jsd;
  j["config"] = report.config_echo;
  return j;
}

MetricsReport report_from_json(const json& j) {
  MetricsReport report;
  report.method = j.at("method").get<std::string>();
  report.seed = j.at("seed").get<std::uint64_t>();
  report.n_seen_domains = j.at("n_seen_domains").get<int>();
  report.unseen_domain = j.at("unseen_domain").get<int>();
  for (const auto& c : j.at("cells")) {
    CellMetrics cell;
    cell.domain = c.at("domain").get<int>();
    cell.nativeness = c.at("nativeness").get<std::string>();
    cell.raw_error = c.at("raw_error").get<double>();
    cell.count = c.at("count").get<int>();
    if (c.contains("normalized_error")) {
      cell.normalized_error = c.at("normalized_error").get<double>();
    }
    report.cells.push_back(std::move(cell));
  }
  report.probe_accuracy = j.at("probe_accuracy").get<double>();
  report.embedding_jsd = j.at("embedding_jsd").get<double>();
  if (j.contains("config")) report.config_echo = j.at("config");
  return report;
}

json train_config_to_json(const TrainConfig& config) {
  json j;
  j["method"] = method_name(config.method);
  j["alpha"] = config.alpha;
  j["lambda"] = config.lambda;
  j["lambda_warmup_steps"] = config.lambda_warmup_steps;
  j["batch_size"] = config.batch_size;
  j["epochs"] = config.epochs;
  j["seed"] = config.seed;
  j["k"] = config.k;
  j["model"] = {{"embed_dim", config.dims.embed_dim},
                {"generator_hidden", config.dims.generator_hidden},
                {"classifier_hidden", config.dims.classifier_hidden},
                {"task_hidden", config.dims.task_hidden},
                {"linear_embed_width", config.dims.linear_embed_width}};
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig config;
  if (j.contains("method")) config.method = parse_method(j.at("method").get<std::string>());
  if (j.contains("alpha")) config.alpha = j.at("alpha").get<double>();
  if (j.contains("lambda")) config.lambda = j.at("lambda").get<double>();
  if (j.contains("lambda_warmup_steps")) {
    config.lambda_warmup_steps = j.at("lambda_warmup_steps").get<int>();
  }
  if (j.contains("batch_size")) config.batch_size = j.at("batch_size").get<int>();
  if (j.contains("epochs")) config.epochs = j.at("epochs").get<int>();
  if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("k")) config.k = j.at("k").get<int>();
  if (j.contains("model")) {
    const auto& m = j.at("model");
    if (m.contains("embed_dim")) config.dims.embed_dim = m.at("embed_dim").get<int>();
    if (m.contains("generator_hidden")) {
      config.dims.generator_hidden = m.at("generator_hidden").get<std::vector<int>>();
    }
    if (m.contains("classifier_hidden")) {
      config.dims.classifier_hidden = m.at("classifier_hidden").get<std::vector<int>>();
    }
    if (m.contains("task_hidden")) {
      config.dims.task_hidden = m.at("task_hidden").get<std::vector<int>>();
    }
    if (m.contains("linear_embed_width")) {
      config.dims.linear_embed_width = m.at("linear_embed_width").get<int>();
    }
  }
  return config;
}

void normalize_reports(std::vector<MetricsReport>& reports, const std::string& reference_method) {
  // Reference raw error per seed: (reference method, domain 0, native).
  std::map<std::uint64_t, double> reference;
  for (const auto& report : reports) {
    if (report.method != reference_method) continue;
    for (const auto& cell : report.cells) {
      if (cell.domain == 0 && cell.nativeness == "native") {
        reference[report.seed] = cell.raw_error;
      }
    }
  }
  for (auto& report : reports) {
    const auto it = reference.find(report.seed);
    if (it == reference.end()) {
      throw ValidationError("no \"" + reference_method + "\" run with seed " +
                            std::to_string(report.seed) + " to normalize against");
    }
    if (it->second <= 0.0) {
      throw ValidationError("reference cell error is zero for seed " +
                            std::to_string(report.seed) + "; normalized errors undefined");
    }
    for (auto& cell : report.cells) {
      cell.normalized_error = cell.raw_error / it->second;
    }
  }
}

void write_merged_csv(const std::vector<MetricsReport>& reports, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "method,domain,nativeness,raw_error,normalized_error,probe_acc,emb_jsd,seed\n";
  char line[256];
  for (const auto& report : reports) {
    for (const auto& cell : report.cells) {
      if (!cell.normalized_error) {
        throw ValidationError("write_merged_csv: normalized errors missing; call "
                              "normalize_reports first");
      }
      std::snprintf(line, sizeof(line), "%s,%d,%s,%.6f,%.6f,%.6f,%.6f,%llu\n",
                    report.method.c_str(), cell.domain, cell.nativeness.c_str(), cell.raw_error,
                    *cell.normalized_error, report.probe_accuracy, report.embedding_jsd,
                    static_cast<unsigned long long>(report.seed));
      out << line;
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace datlab::trainer
