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
// Command-line harness: data generation, relabeling, training grids, theory
// verification, and report comparison.
//
// Exit codes: 0 success, 2 validation, 3 I/O, 4 training divergence,
// 5 theory-verification failure.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "datlab/datagen.hpp"
#include "datlab/nets.hpp"
#include "datlab/relabel.hpp"
#include "datlab/theory.hpp"
#include "datlab/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;
constexpr int kExitDiverged = 4;
constexpr int kExitTheory = 5;

struct GenDataArgs {
  std::string config_path;
  std::string out_dir;
};

int cmd_gen_data(const GenDataArgs& args) {
  datlab::datagen::GenConfig config = args.config_path.empty()
                                          ? datlab::datagen::GenConfig::defaults()
                                          : datlab::datagen::read_gen_config(args.config_path);
  datlab::datagen::GenResult result = datlab::datagen::generate(config);

  std::error_code ec;
  fs::create_directories(args.out_dir, ec);
  if (ec) throw datlab::IoError("cannot create directory " + args.out_dir + ": " + ec.message());

  const fs::path dir(args.out_dir);
  datlab::datagen::write_dataset(result.train, (dir / "train.jsonl").string());
  datlab::datagen::write_dataset(result.test_seen, (dir / "test_seen.jsonl").string());
  datlab::datagen::write_dataset(result.test_unseen, (dir / "test_unseen.jsonl").string());

  std::printf("train: %zu records\n", result.train.size());
  std::printf("test_seen: %zu records\n", result.test_seen.size());
  std::printf("test_unseen: %zu records\n", result.test_unseen.size());
  std::printf("raw-feature domain probe accuracy: %.4f (required > %.2f)\n",
              result.domain_probe_accuracy, config.min_probe_accuracy);
  return kExitOk;
}

struct RelabelArgs {
  std::string data_path;
  std::string mode;
  int k = 8;
  std::uint64_t seed = 7;
  std::string out_path;
  int epochs = 30;
  double alpha = 0.1;
  int hidden = 32;
};

int cmd_relabel(const RelabelArgs& args) {
  if (args.mode != "unsup" && args.mode != "soft") {
    throw datlab::ValidationError("mode must be \"unsup\" or \"soft\", got \"" + args.mode + "\"");
  }
  datlab::datagen::Dataset dataset = datlab::datagen::read_dataset(args.data_path);

  int n_domains = 0;
  for (const auto& rec : dataset.records) n_domains = std::max(n_domains, rec.domain_label + 1);
  if (n_domains < 2) {
    throw datlab::ValidationError("dataset has fewer than 2 domain classes");
  }
  const int feature_dim = static_cast<int>(dataset.records.front().features.size());

  datlab::nets::MlpSpec spec{{feature_dim, args.hidden, n_domains},
                             datlab::nets::Activation::kTanh, datlab::nets::Output::kSoftmax};
  const auto classifier = datlab::relabel::train_standalone_classifier(
      dataset, spec, args.epochs, args.seed, args.alpha);

  json sidecar;
  datlab::datagen::Dataset relabeled;
  if (args.mode == "unsup") {
    if (args.k < 2) {
      throw datlab::ValidationError("k must be at least 2 for unsup relabeling, got " +
                                    std::to_string(args.k));
    }
    const auto embeddings = datlab::relabel::extract_embeddings(classifier, dataset);
    const auto clusters = datlab::relabel::kmeans_fit(embeddings.points, args.k, args.seed);
    relabeled = datlab::relabel::relabel_unsup(dataset, clusters, embeddings);
    const auto labels = relabeled.domain_labels();
    sidecar["k"] = args.k;
    sidecar["inertia"] = clusters.inertia;
    sidecar["silhouette"] =
        datlab::relabel::silhouette_score(embeddings.points, labels, args.k);
    sidecar["label_histogram"] = datlab::relabel::label_histogram(labels, args.k);
  } else {
    const auto soft = datlab::relabel::make_soft_labels(classifier, dataset);
    relabeled = dataset;
    double mean_max = 0.0;
    double mean_entropy = 0.0;
    for (std::size_t i = 0; i < relabeled.records.size(); ++i) {
      const auto row = soft.labels.row(static_cast<datlab::Index>(i));
      relabeled.records[i].soft_domain = row.transpose();
      mean_max += row.maxCoeff();
      for (datlab::Index c = 0; c < row.size(); ++c) {
        if (row(c) > 0.0) mean_entropy -= row(c) * std::log(row(c));
      }
    }
    mean_max /= static_cast<double>(relabeled.size());
    mean_entropy /= static_cast<double>(relabeled.size());
    sidecar["mode"] = "soft";
    sidecar["n_classes"] = n_domains;
    sidecar["mean_max_prob"] = mean_max;
    sidecar["mean_entropy"] = mean_entropy;
  }

  datlab::datagen::write_dataset(relabeled, args.out_path);
  const std::string sidecar_path = args.out_path + ".meta.json";
  std::ofstream out(sidecar_path);
  if (!out) throw datlab::IoError("cannot open for writing: " + sidecar_path);
  out << sidecar.dump(2) << '\n';
  std::printf("relabeled %zu records -> %s (sidecar %s)\n", relabeled.size(),
              args.out_path.c_str(), sidecar_path.c_str());
  return kExitOk;
}

struct ExperimentPlan {
  std::string train_data;
  std::string test_seen;
  std::string test_unseen;
  std::string out_dir;
  std::vector<std::uint64_t> seeds;
  std::string reference_method = "pool";
  int forced_unseen_domain = 0;
  std::vector<datlab::trainer::TrainConfig> runs;
};

ExperimentPlan read_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw datlab::IoError("cannot open for reading: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw datlab::ParseError(path, 0, e.what());
  }
  ExperimentPlan plan;
  for (const char* key : {"train_data", "test_seen", "test_unseen", "seeds", "runs"}) {
    if (!j.contains(key)) {
      throw datlab::ValidationError("plan missing key \"" + std::string(key) + "\"");
    }
  }
  plan.train_data = j.at("train_data").get<std::string>();
  plan.test_seen = j.at("test_seen").get<std::string>();
  plan.test_unseen = j.at("test_unseen").get<std::string>();
  if (j.contains("out_dir")) plan.out_dir = j.at("out_dir").get<std::string>();
  plan.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("reference_method")) {
    plan.reference_method = j.at("reference_method").get<std::string>();
  }
  if (j.contains("forced_unseen_domain")) {
    plan.forced_unseen_domain = j.at("forced_unseen_domain").get<int>();
  }
  for (const auto& run : j.at("runs")) {
    plan.runs.push_back(datlab::trainer::train_config_from_json(run));
  }
  if (plan.seeds.empty()) throw datlab::ValidationError("plan has no seeds");
  if (plan.runs.empty()) throw datlab::ValidationError("plan has no runs");
  bool has_reference = false;
  for (const auto& run : plan.runs) {
    if (datlab::trainer::method_name(run.method) == plan.reference_method) has_reference = true;
  }
  if (!has_reference) {
    throw datlab::ValidationError("plan does not include reference_method \"" +
                                  plan.reference_method + "\" needed for normalization");
  }
  return plan;
}

struct TrainArgs {
  std::string plan_path;
  std::string out_dir;  // overrides the plan's out_dir when set
  int jobs = 1;
};

int cmd_train(const TrainArgs& args) {
  ExperimentPlan plan = read_plan(args.plan_path);
  if (!args.out_dir.empty()) plan.out_dir = args.out_dir;
  if (plan.out_dir.empty()) {
    throw datlab::ValidationError("no output directory: set plan out_dir or --out");
  }

  const datlab::datagen::Dataset train_set = datlab::datagen::read_dataset(plan.train_data);
  const datlab::datagen::Dataset test_seen = datlab::datagen::read_dataset(plan.test_seen);
  const datlab::datagen::Dataset test_unseen = datlab::datagen::read_dataset(plan.test_unseen);

  int n_seen = 0;
  for (const auto& rec : test_seen.records) n_seen = std::max(n_seen, rec.domain_label + 1);

  std::error_code ec;
  fs::create_directories(plan.out_dir, ec);
  if (ec) throw datlab::IoError("cannot create directory " + plan.out_dir + ": " + ec.message());

  // Run files are append-only: refuse to overwrite earlier results.
  struct RunSpec {
    datlab::trainer::TrainConfig config;
    fs::path path;
  };
  std::vector<RunSpec> runs;
  const fs::path dir(plan.out_dir);
  for (const auto& run : plan.runs) {
    for (std::uint64_t seed : plan.seeds) {
      datlab::trainer::TrainConfig config = run;
      config.seed = seed;
      const std::string name = datlab::trainer::method_name(config.method) + "_seed" +
                               std::to_string(seed) + ".json";
      runs.push_back({config, dir / name});
    }
  }
  const fs::path merged_path = dir / "merged.csv";
  if (fs::exists(merged_path)) {
    throw datlab::IoError("refusing to overwrite " + merged_path.string() +
                          "; use a fresh output directory");
  }
  for (const auto& run : runs) {
    if (fs::exists(run.path)) {
      throw datlab::IoError("refusing to overwrite " + run.path.string() +
                            "; use a fresh output directory");
    }
  }

  std::vector<datlab::trainer::MetricsReport> reports(runs.size());
  std::vector<std::string> failures(runs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> diverged{false};
  std::mutex io_mutex;
  std::exception_ptr first_error;

  auto worker = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= runs.size() || diverged.load()) return;
      const auto& run = runs[idx];
      try {
        auto result = datlab::trainer::train(run.config, train_set);
        const auto policy = datlab::trainer::eval_policy_for(run.config.method, n_seen,
                                                             plan.forced_unseen_domain);
        datlab::trainer::MetricsReport report;
        report.method = datlab::trainer::method_name(run.config.method);
        report.seed = run.config.seed;
        report.n_seen_domains = n_seen;
        report.unseen_domain = n_seen;
        report.cells = datlab::trainer::evaluate(result.model, test_seen, policy);
        for (auto& cell : datlab::trainer::evaluate(result.model, test_unseen, policy)) {
          report.cells.push_back(std::move(cell));
        }
        report.probe_accuracy = datlab::trainer::domain_probe(
            result.model, train_set, datlab::mix_seed(run.config.seed, 2000));
        report.embedding_jsd = datlab::trainer::embedding_jsd(
            result.model, train_set, 32, datlab::mix_seed(run.config.seed, 3000));
        report.config_echo = datlab::trainer::train_config_to_json(run.config);
        report.config_echo["resolved_warmup_steps"] = result.warmup_steps;

        std::ofstream out(run.path);
        if (!out) throw datlab::IoError("cannot open for writing: " + run.path.string());
        out << datlab::trainer::report_to_json(report).dump(2) << '\n';
        reports[idx] = std::move(report);

        std::lock_guard<std::mutex> lock(io_mutex);
        std::printf("completed %s seed %llu (final task loss %.4f)\n",
                    datlab::trainer::method_name(run.config.method).c_str(),
                    static_cast<unsigned long long>(run.config.seed),
                    result.trace.back().task);
        std::fflush(stdout);
      } catch (const datlab::TrainingDiverged& e) {
        std::lock_guard<std::mutex> lock(io_mutex);
        failures[idx] = e.what();
        diverged.store(true);
        return;
      } catch (...) {
        std::lock_guard<std::mutex> lock(io_mutex);
        if (!first_error) first_error = std::current_exception();
        diverged.store(true);
        return;
      }
    }
  };

  const int jobs = std::max(1, args.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  if (first_error) std::rethrow_exception(first_error);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (!failures[i].empty()) {
      std::fprintf(stderr, "training diverged (%s seed %llu): %s\n",
                   datlab::trainer::method_name(runs[i].config.method).c_str(),
                   static_cast<unsigned long long>(runs[i].config.seed), failures[i].c_str());
      return kExitDiverged;
    }
  }

  datlab::trainer::normalize_reports(reports, plan.reference_method);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::ofstream out(runs[i].path);
    if (!out) throw datlab::IoError("cannot open for writing: " + runs[i].path.string());
    out << datlab::trainer::report_to_json(reports[i]).dump(2) << '\n';
  }
  datlab::trainer::write_merged_csv(reports, merged_path.string());
  std::printf("wrote %zu reports and %s\n", runs.size(), merged_path.string().c_str());
  return kExitOk;
}

struct VerifyTheoryArgs {
  int n = 3;
  int s = 4;
  std::uint64_t seed = 7;
  std::string out_csv;
  int steps = 20000;
  double inner_step_size = 0.5;
  double step_size = 1.0;
};

int cmd_verify_theory(const VerifyTheoryArgs& args) {
  if (args.n < 2) throw datlab::ValidationError("n must be at least 2, got " + std::to_string(args.n));
  if (args.s < 2) throw datlab::ValidationError("s must be at least 2, got " + std::to_string(args.s));

  // Random distributions for the inner-max check.
  datlab::Rng rng(datlab::mix_seed(args.seed, 0));
  std::vector<datlab::theory::DiscreteDistribution> dists;
  for (int i = 0; i < args.n; ++i) {
    datlab::Vector logits(args.s);
    for (int j = 0; j < args.s; ++j) logits(j) = rng.normal();
    dists.push_back(datlab::theory::DiscreteDistribution::from_logits(logits));
  }
  const auto inner =
      datlab::theory::verify_inner_max(dists, args.steps, args.inner_step_size);
  std::printf("inner max: sup-norm distance to closed form %.3e after %d steps\n",
              inner.sup_error, inner.steps_used);

  const auto minimax =
      datlab::theory::verify_minimax(args.n, args.s, args.seed, args.steps, args.step_size);

  if (!args.out_csv.empty()) {
    std::ofstream out(args.out_csv);
    if (!out) throw datlab::IoError("cannot open for writing: " + args.out_csv);
    out << "step,value,jsd\n";
    char line[128];
    for (std::size_t i = 0; i < minimax.trace.size(); ++i) {
      std::snprintf(line, sizeof(line), "%zu,%.12f,%.12e\n", i, minimax.trace[i].value,
                    minimax.trace[i].jsd);
      out << line;
    }
    if (!out) throw datlab::IoError("write failed: " + args.out_csv);
  }

  const double target = -static_cast<double>(args.n) * std::log(static_cast<double>(args.n));
  const double final_jsd = minimax.trace.back().jsd;
  std::printf("minimax: %zu steps, final value %.6f, target -N log N = %.6f, final jsd %.3e\n",
              minimax.trace.size(), minimax.final_value, target, final_jsd);

  const bool inner_ok = inner.sup_error < 1e-3;
  const bool minimax_ok = minimax.converged;
  std::printf("inner max %s, minimax %s\n", inner_ok ? "PASS" : "FAIL",
              minimax_ok ? "PASS" : "FAIL");
  return (inner_ok && minimax_ok) ? kExitOk : kExitTheory;
}

struct CompareArgs {
  std::vector<std::string> report_paths;
};

int cmd_compare(const CompareArgs& args) {
  if (args.report_paths.size() < 2) {
    throw datlab::ValidationError("compare needs at least 2 report files, got " +
                                  std::to_string(args.report_paths.size()));
  }
  std::vector<datlab::trainer::MetricsReport> reports;
  for (const auto& path : args.report_paths) {
    std::ifstream in(path);
    if (!in) throw datlab::IoError("cannot open for reading: " + path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw datlab::ParseError(path, 0, e.what());
    }
    try {
      reports.push_back(datlab::trainer::report_from_json(j));
    } catch (const json::exception& e) {
      throw datlab::ValidationError("schema mismatch in " + path + ": " + e.what());
    }
  }

  const int n_seen = reports.front().n_seen_domains;
  const int unseen = reports.front().unseen_domain;
  for (const auto& report : reports) {
    if (report.n_seen_domains != n_seen || report.unseen_domain != unseen) {
      throw datlab::ValidationError("schema mismatch: reports cover different domain sets");
    }
  }

  // Mean raw error per (method, domain, nativeness) across seeds.
  std::vector<std::string> methods;
  std::map<std::string, std::map<std::pair<int, std::string>, std::pair<double, int>>> sums;
  std::map<std::string, std::pair<double, double>> diag_sums;  // probe, jsd
  std::map<std::string, int> diag_counts;
  for (const auto& report : reports) {
    if (std::find(methods.begin(), methods.end(), report.method) == methods.end()) {
      methods.push_back(report.method);
    }
    for (const auto& cell : report.cells) {
      auto& slot = sums[report.method][{cell.domain, cell.nativeness}];
      slot.first += cell.raw_error;
      slot.second += 1;
    }
    diag_sums[report.method].first += report.probe_accuracy;
    diag_sums[report.method].second += report.embedding_jsd;
    diag_counts[report.method] += 1;
  }
  auto mean_cell = [&](const std::string& method, int domain,
                       const std::string& nat) -> std::optional<double> {
    const auto mit = sums.find(method);
    if (mit == sums.end()) return std::nullopt;
    const auto cit = mit->second.find({domain, nat});
    if (cit == mit->second.end() || cit->second.second == 0) return std::nullopt;
    return cit->second.first / cit->second.second;
  };

  // Normalize against the reference method when present (data pooling).
  std::optional<double> reference;
  const std::string reference_method = "pool";
  if (sums.count(reference_method) > 0) {
    reference = mean_cell(reference_method, 0, "native");
    if (reference && *reference <= 0.0) reference.reset();
  }
  std::printf("%s task error per method and domain%s\n",
              reference ? "normalized" : "raw",
              reference ? " (reference: pool, domain 0, native = 1.000)" : "");

  // Column layout: seen domains (native, nonnative, avg), then unseen avg.
  struct Column {
    int domain;
    std::string nat;
    std::string header;
  };
  std::vector<Column> columns;
  for (int d = 0; d < n_seen; ++d) {
    columns.push_back({d, "native", "d" + std::to_string(d) + ".nat"});
    columns.push_back({d, "nonnative", "d" + std::to_string(d) + ".non"});
    columns.push_back({d, "avg", "d" + std::to_string(d) + ".avg"});
  }
  columns.push_back({unseen, "avg", "unseen"});

  // Best (lowest) value per column gets a '*'.
  std::map<std::string, double> best;
  for (const auto& col : columns) {
    for (const auto& method : methods) {
      const auto v = mean_cell(method, col.domain, col.nat);
      if (!v) continue;
      const auto it = best.find(col.header);
      if (it == best.end() || *v < it->second) best[col.header] = *v;
    }
  }

  std::printf("%-14s", "method");
  for (const auto& col : columns) std::printf(" %10s", col.header.c_str());
  std::printf(" %10s %10s\n", "probe", "emb_jsd");
  for (const auto& method : methods) {
    std::printf("%-14s", method.c_str());
    for (const auto& col : columns) {
      const auto v = mean_cell(method, col.domain, col.nat);
      if (!v) {
        std::printf(" %10s", "-");
        continue;
      }
      const double shown = reference ? *v / *reference : *v;
      const bool is_best = best.count(col.header) > 0 && *v == best[col.header];
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.3f%s", shown, is_best ? "*" : "");
      std::printf(" %10s", buf);
    }
    const int n_runs = diag_counts[method];
    std::printf(" %10.3f %10.3f\n", diag_sums[method].first / n_runs,
                diag_sums[method].second / n_runs);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"datlab: domain-adversarial training laboratory"};
  app.require_subcommand(1);

  GenDataArgs gen_args;
  auto* gen = app.add_subcommand("gen-data", "generate synthetic multi-domain datasets");
  gen->add_option("--config", gen_args.config_path, "generation config JSON (defaults used if omitted)");
  gen->add_option("--out", gen_args.out_dir, "output directory")->required();

  RelabelArgs relabel_args;
  auto* rel = app.add_subcommand("relabel", "relabel a dataset via clustering or soft labels");
  rel->add_option("--data", relabel_args.data_path, "input dataset (JSONL)")->required();
  rel->add_option("--mode", relabel_args.mode, "unsup | soft")->required();
  rel->add_option("--k", relabel_args.k, "cluster count for unsup mode")->capture_default_str();
  rel->add_option("--seed", relabel_args.seed, "RNG seed")->capture_default_str();
  rel->add_option("--out", relabel_args.out_path, "output dataset path")->required();
  rel->add_option("--epochs", relabel_args.epochs, "classifier training epochs")->capture_default_str();
  rel->add_option("--alpha", relabel_args.alpha, "classifier learning rate")->capture_default_str();
  rel->add_option("--hidden", relabel_args.hidden, "classifier hidden width")->capture_default_str();

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "run an experiment plan");
  train->add_option("--plan", train_args.plan_path, "experiment plan JSON")->required();
  train->add_option("--out", train_args.out_dir, "output directory (overrides plan)");
  train->add_option("--jobs", train_args.jobs, "concurrent runs")->capture_default_str();

  VerifyTheoryArgs verify_args;
  auto* verify = app.add_subcommand("verify-theory", "verify the minimax/JSD equivalence numerically");
  verify->add_option("--n", verify_args.n, "number of distributions")->capture_default_str();
  verify->add_option("--s", verify_args.s, "support size")->capture_default_str();
  verify->add_option("--seed", verify_args.seed, "RNG seed")->capture_default_str();
  verify->add_option("--out", verify_args.out_csv, "trace CSV path (step,value,jsd)");
  verify->add_option("--steps", verify_args.steps, "maximum optimization steps")->capture_default_str();
  verify->add_option("--inner-step-size", verify_args.inner_step_size, "inner-max ascent step size")
      ->capture_default_str();
  verify->add_option("--step-size", verify_args.step_size, "minimax descent step size")
      ->capture_default_str();

  CompareArgs compare_args;
  auto* compare = app.add_subcommand("compare", "tabulate two or more report files");
  compare->add_option("reports", compare_args.report_paths, "report JSON files")->expected(-1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gen_args);
    if (rel->parsed()) return cmd_relabel(relabel_args);
    if (train->parsed()) return cmd_train(train_args);
    if (verify->parsed()) return cmd_verify_theory(verify_args);
    if (compare->parsed()) return cmd_compare(compare_args);
  } catch (const datlab::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const datlab::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const datlab::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const datlab::TrainingDiverged& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDiverged;
  } catch (const datlab::OptimizationFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitTheory;
  }
  return kExitValidation;
}
